#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace bfwi::cli;
  CLI::App app{"Conditional bridge sampling lab for 2D acoustic velocity inversion"};
  app.require_subcommand(1);

  CommonOptions common;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* c = cmd->add_option("--config", common.config, "Experiment config (JSON)");
    if (config_required) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", common.out, "Output directory");
    cmd->add_option("--threads", common.threads, "Worker threads (default: BFWI_THREADS or all cores)");
    cmd->add_option("--seed-override", seed, "Replace every config seed by one derived from this value");
  };

  ModelOptions model;
  auto add_model = [&](CLI::App* cmd, bool checkpoint_required) {
    auto* c = cmd->add_option("--checkpoint", model.checkpoint, "Trained checkpoint");
    if (checkpoint_required) c->required();
    cmd->add_option("--data", model.data, "Dataset directory")->required();
  };

  auto* gen = app.add_subcommand("gen-data", "Generate velocity models, simulate surveys, build a dataset");
  add_common(gen, true);

  std::string train_data;
  auto* tr = app.add_subcommand("train", "Train a denoiser; writes checkpoint.bfwi and train_log.csv");
  add_common(tr, true);
  tr->add_option("--data", train_data, "Dataset directory")->required();

  std::size_t sample_records = 0;
  auto* smp = app.add_subcommand("sample", "Reconstruct records; writes NPY trajectories and PNG panels");
  add_common(smp, false);
  add_model(smp, true);
  smp->add_option("--records", sample_records, "Validation records to reconstruct (default: output.max_panels)");

  bool identity = false;
  std::string distortion;
  auto* ev = app.add_subcommand("eval", "Evaluate MAE, MSE and SSIM on the validation split");
  add_common(ev, false);
  add_model(ev, false);
  ev->add_flag("--identity", identity, "Score the smoothed input itself (no-inversion baseline)");
  ev->add_option("--distortion", distortion, "Initial-guess preset: in_distribution, ood_heavy, ood_light");

  std::vector<std::size_t> nfe_list{1, 2, 5, 10, 20, 50};
  std::string mode = "stochastic";
  std::size_t repeats = 1;
  auto* nfe = app.add_subcommand("nfe-sweep", "Evaluate across numbers of denoiser calls");
  add_common(nfe, false);
  add_model(nfe, true);
  nfe->add_option("--nfe", nfe_list, "NFE values")->delimiter(',');
  nfe->add_option("--mode", mode, "stochastic, deterministic_mean or ot_ode");
  nfe->add_option("--repeats", repeats, "Seeds averaged per record (stochastic mode)");

  std::vector<double> eta_list{0.0, 0.2, 0.5, 0.8, 1.0};
  std::size_t guesses = 16;
  std::size_t records = 32;
  auto* gs = app.add_subcommand("guidance-sweep", "Reconstruction spread across guidance scales");
  add_common(gs, false);
  add_model(gs, true);
  gs->add_option("--eta", eta_list, "Guidance scales")->delimiter(',');
  gs->add_option("--guesses", guesses, "Initial guesses per record");
  gs->add_option("--records", records, "Validation records");

  CLI11_PARSE(app, argc, argv);
  for (auto* cmd : app.get_subcommands()) {
    if (cmd->count("--seed-override") > 0) common.seed_override = seed;
  }

  try {
    if (gen->parsed()) return gen_data(common);
    if (tr->parsed()) return train(common, train_data);
    if (smp->parsed()) return sample(common, model, sample_records);
    if (ev->parsed()) return eval(common, model, identity, distortion);
    if (nfe->parsed()) return nfe_sweep(common, model, nfe_list, mode, repeats);
    if (gs->parsed()) return guidance_sweep(common, model, eta_list, guesses, records);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bfwi: error: %s\n", e.what());
    return 1;
  }
  return 2;
}
