// qemlab command line runner.
#include <CLI11.hpp>

#include <iostream>

#include "qemlab/qemlab.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qemlab: conditioned transfer operators, quasi-ergodic measures and filtrations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out, format;
  std::int64_t seed = -1;
  int threads = 1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", format, "vector/table format")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* spectrum = app.add_subcommand("spectrum", "leading eigenpair and qem");
  auto* mc = app.add_subcommand("mc", "conditioned particle ensemble");
  auto* sweep = app.add_subcommand("sweep", "epsilon sweep against the reference measure");
  auto* filtration = app.add_subcommand("filtration", "filtration order and stratified solve");
  for (auto* s : {spectrum, mc, sweep, filtration}) common(s);

  auto* compare = app.add_subcommand("compare", "distance between two qem CSVs");
  std::string csv_a, csv_b;
  int k = 8;
  compare->add_option("a", csv_a, "first qem CSV")->required();
  compare->add_option("b", csv_b, "second qem CSV")->required();
  compare->add_option("-k,--dictionary", k, "test dictionary size K");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(qemlab::ExitCode::config);
  }

  try {
    if (compare->parsed()) return qemlab::cmd_compare(csv_a, csv_b, k);
    qemlab::RunOptions ro;
    if (!out.empty()) ro.out = out;
    if (!format.empty()) ro.format = format;
    if (seed >= 0) ro.seed = static_cast<std::uint64_t>(seed);
    ro.threads = threads;
    const auto cfg = qemlab::apply_overrides(qemlab::load_config(config_path), ro);
    if (spectrum->parsed()) return qemlab::cmd_spectrum(cfg, threads);
    if (mc->parsed()) return qemlab::cmd_mc(cfg, threads);
    if (sweep->parsed()) return qemlab::cmd_sweep(cfg, threads);
    if (filtration->parsed()) return qemlab::cmd_filtration(cfg, threads);
  } catch (const qemlab::Error& e) {
    std::cerr << "qemlab: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "qemlab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
