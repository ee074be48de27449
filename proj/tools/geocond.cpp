// geocond: synthesize fluvial training images, train the GAN, and generate
// conditioned geological realizations.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geocond/errors.hpp"
#include "geocond/evalstats.hpp"
#include "geocond/gan.hpp"
#include "geocond/gradcheck.hpp"
#include "geocond/inpaint.hpp"
#include "geocond/io.hpp"
#include "geocond/obm.hpp"
#include "geocond/parallel.hpp"
#include "geocond/runconfig.hpp"

namespace fs = std::filesystem;
using namespace geocond;

namespace {

// ------------------------------------------------------------- staging

/// Collects tmp-file -> final-path moves; everything lands atomically on
/// commit, nothing on error.
class OutputStage {
 public:
  ~OutputStage() {
    for (const auto& [tmp, final] : pending_) {
      std::error_code ec;
      fs::remove(tmp, ec);
    }
  }

  fs::path stage(const fs::path& final_path) {
    fs::path tmp = final_path;
    tmp += ".tmp";
    pending_.emplace_back(tmp, final_path);
    return tmp;
  }

  void commit() {
    for (const auto& [tmp, final] : pending_) fs::rename(tmp, final);
    pending_.clear();
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> pending_;
};

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string provenance(const std::string& hash, std::uint64_t seed) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# geocond %s\n# config_hash=%s seed=%" PRIu64 "\n", kVersion,
                hash.c_str(), seed);
  return std::string(buf);
}

void apply_workers(int workers) {
  if (workers <= 0) {
    if (const char* env = std::getenv("GEOCOND_WORKERS")) workers = std::atoi(env);
  }
  set_workers(workers);
}

std::string format_index(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, value);
  return std::string(buf);
}

// ------------------------------------------------------------ subcommands

struct SynthArgs {
  std::string config_path;
  std::string out_path;
  std::string dump_pgm_dir;
  std::int64_t seed = -1;
  int count = 0;
  int size = 0;
  int workers = 0;
};

int run_synth(const SynthArgs& args) {
  RunConfig config = load_run_config(args.config_path);
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (args.count > 0) config.obm_count = args.count;
  if (args.size > 0) {
    config.obm.height = args.size;
    config.obm.width = args.size;
  }
  config.validate();
  apply_workers(args.workers > 0 ? args.workers : config.workers);

  std::cerr << provenance(config_hash(config), config.seed);
  std::vector<BinaryImage> images =
      obm::generate_dataset(config.obm, config.obm_count, config.seed);

  OutputStage stage;
  write_dataset(images, stage.stage(args.out_path));
  if (!args.dump_pgm_dir.empty()) {
    fs::create_directories(args.dump_pgm_dir);
    for (std::size_t i = 0; i < images.size(); ++i)
      write_pgm(images[i], stage.stage(fs::path(args.dump_pgm_dir) /
                                       ("image_" + format_index(static_cast<int>(i), 5) + ".pgm")));
  }
  stage.commit();
  std::cerr << "synth: wrote " << images.size() << " images to " << args.out_path << "\n";
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::string log_path;
  int epochs = 0;
  int workers = 0;
};

int run_train(const TrainArgs& args) {
  RunConfig config = load_run_config(args.config_path);
  if (args.epochs > 0) config.gan.epochs = args.epochs;
  config.validate();
  apply_workers(args.workers > 0 ? args.workers : config.workers);

  const std::vector<BinaryImage> dataset = read_dataset(args.data_path);
  if (!dataset.empty()) config.gan.image_size = dataset.front().height;
  config.gan.validate();

  const std::string header = provenance(config_hash(config), config.seed);
  std::cerr << header;

  gan::GanModel model = gan::build(config.gan);
  gan::Trainer trainer(model);

  std::string log = header;
  for (int epoch = 0; epoch < config.gan.epochs; ++epoch) {
    const gan::EpochSummary s = trainer.train_epoch(dataset, epoch);
    // thresholded proportion of a fixed probe batch tracks Appendix-B control
    std::vector<RealImage> probe =
        gan::sample(model, 64, detail::mix64(config.seed ^ (0xABCDu + epoch)));
    double prop = 0.0;
    for (const RealImage& img : probe) prop += stats::proportion(threshold(img));
    prop /= static_cast<double>(probe.size());

    char line[160];
    std::snprintf(line, sizeof line,
                  "epoch=%d d_loss=%.6f g_loss=%.6f d_acc_real=%.4f d_acc_fake=%.4f "
                  "sample_proportion=%.4f\n",
                  epoch, s.d_loss, s.g_loss, s.acc_real, s.acc_fake, prop);
    log += line;
    std::cerr << line;
  }

  OutputStage stage;
  gan::save_model(model, stage.stage(args.out_path));
  if (!args.log_path.empty()) {
    std::ofstream out(stage.stage(args.log_path));
    out << log;
    if (!out) throw ValidationError("cannot write log " + args.log_path);
  }
  stage.commit();
  std::cerr << "train: checkpoint written to " << args.out_path << "\n";
  return 0;
}

struct GenerateArgs {
  std::string model_path;
  std::string out_dir;
  int count = 0;
  std::uint64_t seed = 0;
  int workers = 0;
};

int run_generate(const GenerateArgs& args) {
  apply_workers(args.workers);
  gan::GanModel model = gan::load_model(args.model_path);
  std::cerr << provenance(fnv1a_hex("generate:" + std::to_string(args.count)), args.seed);

  std::vector<RealImage> samples = gan::sample(model, args.count, args.seed);
  fs::create_directories(args.out_dir);
  OutputStage stage;
  for (std::size_t i = 0; i < samples.size(); ++i)
    write_pgm(threshold(samples[i]),
              stage.stage(fs::path(args.out_dir) /
                          ("sample_" + format_index(static_cast<int>(i), 5) + ".pgm")));
  stage.commit();
  std::cerr << "generate: wrote " << samples.size() << " samples to " << args.out_dir << "\n";
  return 0;
}

struct ConditionArgs {
  std::string model_path;
  std::string measurements_path;
  std::string out_dir;
  inpaint::InpaintConfig config;
  std::string radius_text = "auto";
  int workers = 0;
};

int run_condition(ConditionArgs args) {
  apply_workers(args.workers);
  if (args.radius_text == "auto") {
    args.config.radius = inpaint::kRadiusAuto;
  } else {
    try {
      std::size_t used = 0;
      args.config.radius = std::stoi(args.radius_text, &used);
      if (used != args.radius_text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("--radius expects an integer or \"auto\", got " + args.radius_text);
    }
  }
  args.config.validate();

  gan::GanModel model = gan::load_model(args.model_path);
  const int n = model.config.image_size;
  const MeasurementSet measurements = read_measurements(args.measurements_path, n, n);
  if (measurements.empty())
    throw ValidationError("measurement file holds no records: " + args.measurements_path);

  const std::string hash =
      fnv1a_hex("condition:" + std::to_string(args.config.lambda) + ":" +
                std::to_string(args.config.iterations) + ":" + std::to_string(args.config.radius) +
                ":" + std::to_string(args.config.restarts));
  const std::string header = provenance(hash, args.config.seed);
  std::cerr << header;

  inpaint::GanLatentModel latent(model);
  std::vector<inpaint::Realization> realizations =
      inpaint::condition(latent, measurements, args.config);

  fs::create_directories(args.out_dir);
  OutputStage stage;
  std::string report = header;
  report += "# rank restart total_loss context_loss prior_loss honor_rate\n";
  for (std::size_t i = 0; i < realizations.size(); ++i) {
    const inpaint::Realization& r = realizations[i];
    char line[160];
    std::snprintf(line, sizeof line, "%zu %d %.6f %.6f %.6f %.4f\n", i, r.restart_index,
                  r.total_loss, r.context_loss, r.prior_loss, r.honor_rate);
    report += line;
    write_pgm(threshold(r.image),
              stage.stage(fs::path(args.out_dir) /
                          ("realization_" + format_index(static_cast<int>(i), 3) + ".pgm")));
  }
  {
    std::ofstream out(stage.stage(fs::path(args.out_dir) / "report.txt"));
    out << report;
    if (!out) throw ValidationError("cannot write report in " + args.out_dir);
  }
  stage.commit();
  std::cerr << "condition: best honor_rate "
            << (realizations.empty() ? 0.0 : realizations.front().honor_rate) << ", "
            << realizations.size() << " realizations in " << args.out_dir << "\n";
  return 0;
}

struct TraverseArgs {
  std::string model_path;
  std::string out_dir;
  int steps = 8;
  std::uint64_t seed = 0;
  int workers = 0;
};

int run_traverse(const TraverseArgs& args) {
  apply_workers(args.workers);
  gan::GanModel model = gan::load_model(args.model_path);
  std::cerr << provenance(fnv1a_hex("traverse:" + std::to_string(args.steps)), args.seed);

  // endpoints drawn from N(0, 2) (variance 2)
  Rng rng(args.seed);
  const double stddev = std::sqrt(2.0);
  std::vector<float> z1(static_cast<std::size_t>(model.config.latent_dim));
  std::vector<float> z2(static_cast<std::size_t>(model.config.latent_dim));
  for (float& v : z1) v = static_cast<float>(rng.normal() * stddev);
  for (float& v : z2) v = static_cast<float>(rng.normal() * stddev);

  std::vector<RealImage> images = gan::traverse(model, z1, z2, args.steps);
  fs::create_directories(args.out_dir);
  OutputStage stage;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<double> gray(images[i].data.size());
    for (std::size_t p = 0; p < gray.size(); ++p)
      gray[p] = (static_cast<double>(images[i].data[p]) + 1.0) / 2.0;
    write_pgm_gray(images[i].height, images[i].width, gray,
                   stage.stage(fs::path(args.out_dir) /
                               ("step_" + format_index(static_cast<int>(i), 3) + ".pgm")));
  }
  stage.commit();
  std::cerr << "traverse: wrote " << images.size() << " steps to " << args.out_dir << "\n";
  return 0;
}

struct StatsArgs {
  std::string data_path;
  std::string samples_dir;
  std::string out_path;
  int workers = 0;
};

int run_stats(const StatsArgs& args) {
  apply_workers(args.workers);
  const std::vector<BinaryImage> dataset = read_dataset(args.data_path);

  std::vector<BinaryImage> samples;
  if (!args.samples_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(args.samples_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".pgm")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& p : files) samples.push_back(read_pgm(p));
    if (samples.empty())
      throw ValidationError("no .pgm samples found in " + args.samples_dir);
  }

  const std::vector<BinaryImage>& subject = samples.empty() ? dataset : samples;
  const stats::StatsReport report = stats::summarize(subject, subject.size() <= 512);

  const std::string header = provenance(fnv1a_hex("stats:" + args.data_path), 0);
  std::string text = header + report.render();
  if (!samples.empty()) {
    char line[64];
    std::snprintf(line, sizeof line, "proportion_difference=%.6f\n",
                  stats::compare_proportions(dataset, samples));
    text += line;
  }

  OutputStage stage;
  {
    std::ofstream out(stage.stage(args.out_path));
    out << text;
    if (!out) throw ValidationError("cannot write " + args.out_path);
  }
  fs::path mean_path = args.out_path;
  mean_path.replace_extension();
  mean_path += ".mean.pgm";
  write_pgm_gray(report.mean.height, report.mean.width, report.mean.values,
                 stage.stage(mean_path));
  stage.commit();
  std::cout << text;
  return 0;
}

int run_gradcheck(double tolerance) {
  const std::vector<gradcheck::CheckResult> results = gradcheck::run_suite(tolerance);
  bool all_pass = true;
  for (const gradcheck::CheckResult& r : results) {
    std::printf("[%s] %-34s max_err=%.3e tol=%.1e\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.max_err, r.tolerance);
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) throw NumericError("gradient checks failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geological realizations conditioned on point measurements"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* cmd_synth = app.add_subcommand("synth", "Synthesize a fluvial training set");
  cmd_synth->add_option("--config", synth.config_path, "Run configuration JSON")->required();
  cmd_synth->add_option("--out", synth.out_path, "Output dataset (.geod)")->required();
  cmd_synth->add_option("--seed", synth.seed, "Override config seed");
  cmd_synth->add_option("--count", synth.count, "Override image count");
  cmd_synth->add_option("--size", synth.size, "Override grid size (n for n x n)");
  cmd_synth->add_option("--dump-pgm", synth.dump_pgm_dir, "Also dump per-image PGMs here");
  cmd_synth->add_option("--workers", synth.workers, "Worker threads (default: all cores)");

  TrainArgs train;
  CLI::App* cmd_train = app.add_subcommand("train", "Train the GAN on a dataset");
  cmd_train->add_option("--config", train.config_path, "Run configuration JSON")->required();
  cmd_train->add_option("--data", train.data_path, "Training dataset (.geod)")->required();
  cmd_train->add_option("--out", train.out_path, "Output checkpoint (.ggck)")->required();
  cmd_train->add_option("--epochs", train.epochs, "Override epoch count");
  cmd_train->add_option("--log", train.log_path, "Write the training log here");
  cmd_train->add_option("--workers", train.workers, "Worker threads");

  GenerateArgs gen;
  CLI::App* cmd_gen = app.add_subcommand("generate", "Sample unconditional realizations");
  cmd_gen->add_option("--model", gen.model_path, "Checkpoint (.ggck)")->required();
  cmd_gen->add_option("--count", gen.count, "Number of samples")->required();
  cmd_gen->add_option("--seed", gen.seed, "Sampling seed")->required();
  cmd_gen->add_option("--out", gen.out_dir, "Output directory")->required();
  cmd_gen->add_option("--workers", gen.workers, "Worker threads");

  ConditionArgs cond;
  CLI::App* cmd_cond =
      app.add_subcommand("condition", "Generate realizations honoring measurements");
  cmd_cond->add_option("--model", cond.model_path, "Checkpoint (.ggck)")->required();
  cmd_cond->add_option("--measurements", cond.measurements_path, "Measurement CSV")->required();
  cmd_cond->add_option("--out", cond.out_dir, "Output directory")->required();
  cmd_cond->add_option("--restarts", cond.config.restarts, "Independent restarts");
  cmd_cond->add_option("--lambda", cond.config.lambda, "Prior-loss weight");
  cmd_cond->add_option("--radius", cond.radius_text, "Mask expansion radius or \"auto\"");
  cmd_cond->add_option("--iters", cond.config.iterations, "Adam iterations per restart");
  cmd_cond->add_option("--seed", cond.config.seed, "Restart initialization seed");
  cmd_cond->add_option("--workers", cond.workers, "Worker threads");

  TraverseArgs trav;
  CLI::App* cmd_trav = app.add_subcommand("traverse", "Decode a latent-space interpolation");
  cmd_trav->add_option("--model", trav.model_path, "Checkpoint (.ggck)")->required();
  cmd_trav->add_option("--steps", trav.steps, "Interpolation steps (>= 2)")->required();
  cmd_trav->add_option("--seed", trav.seed, "Endpoint seed")->required();
  cmd_trav->add_option("--out", trav.out_dir, "Output directory")->required();
  cmd_trav->add_option("--workers", trav.workers, "Worker threads");

  StatsArgs stats_args;
  CLI::App* cmd_stats = app.add_subcommand("stats", "Summarize dataset / sample statistics");
  cmd_stats->add_option("--data", stats_args.data_path, "Dataset (.geod)")->required();
  cmd_stats->add_option("--samples", stats_args.samples_dir, "Directory of sample PGMs");
  cmd_stats->add_option("--out", stats_args.out_path, "Report path")->required();
  cmd_stats->add_option("--workers", stats_args.workers, "Worker threads");

  double tolerance = 1e-3;
  CLI::App* cmd_grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  cmd_grad->add_option("--tolerance", tolerance, "Relative tolerance (default 1e-3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_train->parsed()) return run_train(train);
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_cond->parsed()) return run_condition(cond);
    if (cmd_trav->parsed()) return run_traverse(trav);
    if (cmd_stats->parsed()) return run_stats(stats_args);
    if (cmd_grad->parsed()) return run_gradcheck(tolerance);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
