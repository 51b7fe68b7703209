// Command-line front end: simulate | reconstruct | evaluate | certify | demo1d.

#include <iostream>

#include <CLI11.hpp>

#include "sfw/commands.hpp"
#include "sfw/io.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int threads = -1;
  bool dump_config = false;
};

void add_global_flags(CLI::App* cmd, GlobalArgs& g) {
  cmd->add_option("--config", g.config_path, "run configuration file");
  cmd->add_option("--seed", g.seed, "override the master seed");
  cmd->add_option("--out-dir", g.out_dir, "override the output directory");
  cmd->add_option("--threads", g.threads, "worker count (0 = all cores)");
  cmd->add_flag("--dump-config", g.dump_config, "print the effective configuration and exit");
}

sfw::RunConfig load_config(const GlobalArgs& g, bool required) {
  sfw::RunConfig cfg;
  if (!g.config_path.empty())
    cfg = sfw::parse_config_file(g.config_path);
  else if (required)
    throw sfw::ConfigError("--config is required for this subcommand");
  if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (g.threads >= 0) cfg.threads = g.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-free sparse spike recovery by Sliding Frank-Wolfe"};
  app.require_subcommand(1);

  GlobalArgs g_sim, g_rec, g_eval, g_cert, g_demo;
  std::vector<std::string> frame_files;
  sfw::EvaluateArgs eval_args;
  sfw::CertifyArgs cert_args;

  auto* sim = app.add_subcommand("simulate", "generate a phantom and noisy frames");
  add_global_flags(sim, g_sim);

  auto* rec = app.add_subcommand("reconstruct", "run SFW on observation frames");
  add_global_flags(rec, g_rec);
  rec->add_option("frames", frame_files, "frame files (binary or CSV)");

  auto* eval = app.add_subcommand("evaluate", "score localizations against ground truth");
  add_global_flags(eval, g_eval);
  eval->add_option("--estimated", eval_args.estimated_csv, "estimated localization CSV")
      ->required();
  eval->add_option("--ground-truth", eval_args.ground_truth_csv, "ground-truth localization CSV")
      ->required();
  eval->add_option("--tag", eval_args.tag, "label for the scores.csv row");
  eval->add_flag("--append", eval_args.append, "append to scores.csv instead of rewriting");

  auto* cert = app.add_subcommand("certify", "build a dual certificate and check nondegeneracy");
  add_global_flags(cert, g_cert);
  cert->add_option("--mode", cert_args.mode, "eta_w | eta_v | closed_form");
  cert->add_flag("--continuous", cert_args.continuous, "use the continuous-mu Laplace oracle");
  cert->add_option("--xc", cert_args.x_c, "cluster point for eta_w");
  cert->add_option("--n-spikes", cert_args.n_spikes, "spike count N for eta_w");
  cert->add_option("--grid", cert_args.grid, "curve samples / sweep nodes per axis");
  cert->add_option("--measure", cert_args.measure_csv, "localization CSV for eta_v");
  cert->add_option("--frame", cert_args.frame, "frame index within --measure");

  auto* demo = app.add_subcommand("demo1d", "1-D Gaussian deconvolution walkthrough");
  add_global_flags(demo, g_demo);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      auto cfg = load_config(g_sim, true);
      if (g_sim.dump_config) {
        std::cout << sfw::dump_config(cfg);
        return sfw::kExitOk;
      }
      return sfw::cmd_simulate(cfg);
    }
    if (rec->parsed()) {
      auto cfg = load_config(g_rec, true);
      if (g_rec.dump_config) {
        std::cout << sfw::dump_config(cfg);
        return sfw::kExitOk;
      }
      return sfw::cmd_reconstruct(cfg, frame_files);
    }
    if (eval->parsed()) {
      auto cfg = load_config(g_eval, false);
      if (g_eval.dump_config) {
        std::cout << sfw::dump_config(cfg);
        return sfw::kExitOk;
      }
      return sfw::cmd_evaluate(cfg, eval_args);
    }
    if (cert->parsed()) {
      auto cfg = load_config(g_cert, true);
      if (g_cert.dump_config) {
        std::cout << sfw::dump_config(cfg);
        return sfw::kExitOk;
      }
      return sfw::cmd_certify(cfg, cert_args);
    }
    if (demo->parsed()) {
      auto cfg = load_config(g_demo, false);
      if (g_demo.dump_config) {
        std::cout << sfw::dump_config(cfg);
        return sfw::kExitOk;
      }
      return sfw::cmd_demo1d(cfg);
    }
  } catch (const sfw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sfw::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
