#include "checkerboard/commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "checkerboard/cnn.hpp"
#include "checkerboard/config.hpp"
#include "checkerboard/dataset.hpp"
#include "checkerboard/error.hpp"
#include "checkerboard/fem_validation.hpp"
#include "checkerboard/linear_model.hpp"
#include "checkerboard/metrics.hpp"
#include "checkerboard/surrogate.hpp"

namespace checkerboard::cli {
namespace {

namespace fs = std::filesystem;

// Values given on the command line; unset ones fall back to the config file.
struct Overrides {
  std::string config;
  std::string grid;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_grid) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  if (with_grid) cmd->add_option("--grid", o.grid, "grid size: 4x2, 8x4 or 16x8");
  cmd->add_option("--seed", o.seed, "root random seed");
  cmd->add_option("--workers", o.workers, "worker threads");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.grid.empty()) c.grid = parse_grid(o.grid);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) {
    if (*o.workers < 1) throw ArgumentError("--workers must be >= 1");
    c.workers = *o.workers;
  }
  if (!o.out.empty()) c.output_dir = o.out;
  c.optimize.params.gene_count = c.grid.elements();
  return c;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  return file.parent_path() / (file.stem().string() + suffix);
}

std::string bit_string(std::span<const std::uint8_t> bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  Overrides o;
  std::optional<std::size_t> count;
  std::optional<std::size_t> batch_size;
  std::size_t bins = 30;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  if (a.count && *a.count == 0) throw ArgumentError("--count must be >= 1");
  if (a.o.out.empty()) throw ArgumentError("--out is required");
  Overrides o = a.o;
  o.out.clear();
  RunConfig c = resolve(o);
  if (a.count) c.dataset.count = *a.count;
  if (a.batch_size) c.dataset.stats_batch_size = *a.batch_size;
  c.validate();

  const fs::path file = a.o.out;
  if (file.has_parent_path()) ensure_dir(file.parent_path());
  const auto start = std::chrono::steady_clock::now();
  const auto ds = data::generate(c.dataset.count, c.grid, c.seed, c.workers, c.materials);
  data::write_dataset(file, ds);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "wrote " << ds.size() << " samples (" << grid_name(c.grid) << ") to " << file.string() << " in "
      << std::fixed << std::setprecision(1) << seconds << " s\n";
  out.unsetf(std::ios::fixed);

  const fs::path stats_path = sibling(file, "_stats.csv");
  if (ds.size() < 2) {
    out << "statistics skipped: fewer than two samples\n";
    return 0;
  }
  const auto raw = data::summary_stats(ds);
  const std::size_t bs = c.dataset.stats_batch_size;
  if (ds.size() % bs == 0 && ds.size() / bs >= 2) {
    const auto trace = data::batch_means(ds, bs);
    data::DatasetStats batch_stats;
    for (std::size_t k = 0; k < 3; ++k) batch_stats[k] = data::summary_stats(trace.batch_means[k]);
    data::write_stats_csv(stats_path, raw, &batch_stats);
    data::write_batch_means_csv(sibling(file, "_batch_means.csv"), trace);
    data::write_histogram_csv(sibling(file, "_histogram.csv"), trace, a.bins);
  } else {
    data::write_stats_csv(stats_path, raw);
    out << "batch-means statistics skipped: batch size " << bs << " does not split " << ds.size()
        << " samples into at least two batches\n";
  }
  out << "statistics written to " << stats_path.string() << '\n';
  return 0;
}

// ------------------------------------------------------------ validate-fem

struct ValidateArgs {
  std::string grid = "8x4";
  int samples = 100;
  std::uint64_t seed = 1;
  double perturbation = 0.0;
};

int validate_fem(const ValidateArgs& a, std::ostream& out) {
  fem::ValidationOptions opt;
  opt.grid = parse_grid(a.grid);
  if (a.samples < 1) throw ArgumentError("--samples must be >= 1");
  opt.random_samples = a.samples;
  opt.seed = a.seed;
  opt.stiffness_perturbation = a.perturbation;
  const auto results = fem::run_validation(opt);
  fem::write_report(out, results);
  const bool ok = fem::all_passed(results);
  out << (ok ? "all FE checks passed\n" : "FE VALIDATION FAILED\n");
  return ok ? 0 : 1;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  Overrides o;
  std::string kind;
  std::string data;
  std::optional<double> train_fraction;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
};

int train(const TrainArgs& a, std::ostream& out) {
  if (a.data.empty()) throw ArgumentError("--data is required");
  RunConfig c = resolve(a.o);
  if (a.train_fraction) c.dataset.train_fraction = *a.train_fraction;
  if (a.epochs) c.train.epochs = *a.epochs;
  if (a.batch_size) c.train.batch_size = *a.batch_size;
  if (a.learning_rate) c.train.learning_rate = *a.learning_rate;
  c.validate();

  const auto ds = data::read_dataset(a.data);
  if (ds.empty()) throw ArgumentError("dataset " + a.data + " is empty");
  const auto [train_set, test_set] = data::split(ds, c.dataset.train_fraction, c.seed);
  ensure_dir(c.output_dir);
  out << "train " << train_set.size() << " / test " << test_set.size() << " samples (" << grid_name(ds.grid) << ")\n";
  const auto& eval_set = test_set.empty() ? train_set : test_set;

  if (a.kind == "linear") {
    std::array<linear::LinearModel, 3> models;
    std::ofstream summary(c.output_dir / "linear_summary.csv");
    if (!summary) throw IoError("cannot write " + (c.output_dir / "linear_summary.csv").string());
    summary << std::setprecision(17) << "property,r_squared_train,r_squared_test,train_mse,ridge_used\n";
    for (int k = 0; k < 3; ++k) {
      auto& m = models[static_cast<std::size_t>(k)];
      m = linear::fit(train_set, k);
      linear::write_model_csv(surrogate::linear_model_path(c.output_dir, k), m);
      linear::write_rank_grid_csv(c.output_dir / (std::string("rank_") + data::kPropertyNames[k] + ".csv"), m);
      const double r2_train = linear::r_squared(m, train_set);
      const double r2_test = test_set.size() >= 2 ? linear::r_squared(m, test_set) : std::nan("");
      summary << data::kPropertyNames[k] << ',' << r2_train << ',' << r2_test << ','
              << linear::training_mse(m, train_set) << ',' << (m.ridge_used ? 1 : 0) << '\n';
      out << data::kPropertyNames[k] << ": R^2 train " << r2_train << ", test " << r2_test << '\n';
    }
    const auto model = surrogate::linear_property_model(models);
    std::vector<ga::Genome> genomes;
    for (const auto& s : eval_set.samples) genomes.emplace_back(s.microstructure.bits().begin(), s.microstructure.bits().end());
    const auto report = evaluate_predictions(eval_set, model(genomes));
    write_eval_csv(c.output_dir / "eval.csv", report);
    for (int k = 0; k < 3; ++k)
      out << data::kPropertyNames[k] << ": MAPE " << report.properties[static_cast<std::size_t>(k)].mape << "%\n";
    return 0;
  }
  if (a.kind != "cnn") throw ArgumentError("model kind must be 'linear' or 'cnn'");

  cnn::CnnModel<float> model(cnn::default_config(ds.grid), domain_seed(c.seed, "init"));
  const auto result = cnn::train(model, train_set, test_set, c.train, c.seed, [&](const cnn::EpochLoss& e) {
    out << "epoch " << e.epoch << ": train " << e.train_total() << " test " << e.test_total() << std::endl;
  });
  cnn::write_checkpoint(c.output_dir / "model.cbnn", model);
  cnn::write_loss_history_csv(c.output_dir / "loss_history.csv", result);
  const auto report = evaluate_predictions(eval_set, model.predict(eval_set));
  write_eval_csv(c.output_dir / "eval.csv", report);
  for (int k = 0; k < 3; ++k)
    out << data::kPropertyNames[k] << ": MAPE " << report.properties[static_cast<std::size_t>(k)].mape << "%\n";
  out << "checkpoint written to " << (c.output_dir / "model.cbnn").string() << '\n';
  return 0;
}

// --------------------------------------------------------------- optimize

struct OptimizeArgs {
  Overrides o;
  std::string oracle;
  std::string objective;
  std::string model;
  std::vector<double> weights;
  std::vector<double> normalizers;
  std::optional<int> generation_size;
  std::optional<int> max_generations;
  std::optional<std::size_t> top_k;
};

int optimize(const OptimizeArgs& a, std::ostream& out) {
  RunConfig c = resolve(a.o);
  auto& params = c.optimize.params;
  if (a.generation_size) params.generation_size = *a.generation_size;
  if (a.max_generations) params.max_generations = *a.max_generations;
  if (a.top_k) c.optimize.top_k = *a.top_k;
  if (!a.weights.empty()) {
    if (a.weights.size() != 3) throw ConfigError("--weights needs three values");
    c.optimize.aof.modulus = a.weights[0];
    c.optimize.aof.strength = a.weights[1];
    c.optimize.aof.toughness = a.weights[2];
  }
  if (!a.normalizers.empty()) {
    if (a.normalizers.size() != 3) throw ConfigError("--normalizers needs three values");
    c.optimize.aof.normalizers = fem::CompositeProperties{a.normalizers[0], a.normalizers[1], a.normalizers[2]};
  }

  ga::PropertyModel model;
  if (a.oracle == "fem") {
    c.validate();
    model = ga::fem_property_model(c.grid, c.materials, c.workers);
  } else if (a.oracle == "model") {
    if (a.model.empty()) throw ArgumentError("--model is required with --oracle model");
    auto loaded = surrogate::load_surrogate(a.model);
    c.grid = loaded.grid;
    params.gene_count = c.grid.elements();
    c.validate();
    model = loaded.model;
  } else {
    throw ArgumentError("oracle must be 'model' or 'fem'");
  }

  ga::Objective objective;
  if (a.objective == "aof") {
    objective.aof = c.optimize.aof;
    if (!objective.aof->normalizers) {
      out << "computing AOF normalizers from single-objective runs\n";
      objective.aof->normalizers = surrogate::single_objective_maxima(model, params, c.seed);
    }
  } else {
    objective.property = ga::parse_property(a.objective);
  }

  ensure_dir(c.output_dir);
  const auto result = surrogate::optimize(model, params, objective, c.seed);

  {
    std::ofstream h(c.output_dir / "history.csv");
    if (!h) throw IoError("cannot write " + (c.output_dir / "history.csv").string());
    h << std::setprecision(17) << "generation,best,mean\n";
    for (const auto& e : result.history) h << e.generation << ',' << e.best << ',' << e.mean << '\n';
  }

  const auto top = result.top(c.optimize.top_k);
  std::vector<ga::Genome> genomes;
  for (const auto& t : top) genomes.push_back(t.genome);
  const auto predicted = model(genomes);
  const auto fe = ga::fem_property_model(c.grid, c.materials, c.workers)(genomes);
  {
    std::ofstream bin(c.output_dir / "top_genomes.bin", std::ios::binary);
    std::ofstream csv(c.output_dir / "top_genomes.csv");
    if (!bin || !csv) throw IoError("cannot write genome export in " + c.output_dir.string());
    csv << std::setprecision(17)
        << "rank,fitness,volume_fraction_soft,modulus,strength,toughness,fe_modulus,fe_strength,fe_toughness";
    if (objective.aof) csv << ",f_modulus,f_strength,f_toughness";
    csv << ",genome\n";
    for (std::size_t i = 0; i < top.size(); ++i) {
      const Microstructure m(c.grid, top[i].genome);
      const auto packed = pack(m);
      bin.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
      const auto& p = predicted[i];
      csv << i + 1 << ',' << top[i].fitness << ',' << volume_fraction_soft(m) << ',' << p.modulus << ','
          << p.strength << ',' << p.toughness << ',' << fe[i].modulus << ',' << fe[i].strength << ','
          << fe[i].toughness;
      if (objective.aof) {
        const auto& n = *objective.aof->normalizers;
        csv << ',' << p.modulus / n.modulus << ',' << p.strength / n.strength << ',' << p.toughness / n.toughness;
      }
      csv << ',' << bit_string(m.bits()) << '\n';
    }
  }
  if (objective.aof) {
    std::ofstream n(c.output_dir / "normalizers.csv");
    const auto& v = *objective.aof->normalizers;
    n << std::setprecision(17) << "modulus,strength,toughness\n" << v.modulus << ',' << v.strength << ',' << v.toughness << '\n';
  }

  out << "objective " << objective.describe() << ": best " << result.best_fitness << " after "
      << result.history.size() << " generations" << (result.stagnated ? " (stagnated)" : "") << '\n';
  const Microstructure best(c.grid, result.best);
  out << "best genome " << bit_string(best.bits()) << ", soft volume fraction " << volume_fraction_soft(best) << '\n';
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out;
  std::string subset = "all";
  double train_fraction = 0.9;
  std::uint64_t seed = 1;
};

int eval(const EvalArgs& a, std::ostream& out) {
  const auto surrogate = surrogate::load_surrogate(a.model);
  auto ds = data::read_dataset(a.data);
  if (a.subset == "train" || a.subset == "test") {
    auto [tr, te] = data::split(ds, a.train_fraction, a.seed);
    ds = a.subset == "train" ? std::move(tr) : std::move(te);
  } else if (a.subset != "all") {
    throw ArgumentError("--subset must be all, train or test");
  }
  if (ds.empty()) throw ArgumentError("evaluation set is empty");
  if (ds.grid != surrogate.grid) throw ArgumentError("dataset grid does not match the model");
  std::vector<Microstructure> structures;
  for (const auto& s : ds.samples) structures.push_back(s.microstructure);
  const auto report = evaluate_predictions(ds, surrogate.predict(structures));
  if (!a.out.empty()) {
    const fs::path p = a.out;
    if (p.has_parent_path()) ensure_dir(p.parent_path());
    write_eval_csv(p, report);
  }
  out << "property,mape,max_error,frac_gt_5pct\n";
  for (int k = 0; k < 3; ++k) {
    const auto& r = report.properties[static_cast<std::size_t>(k)];
    out << data::kPropertyNames[k] << ',' << r.mape << ',' << r.max_error << ',' << r.fraction_over_5pct << '\n';
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cracked checkerboard composites: FE labels, surrogates and GA design"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a labeled dataset with the FE solver");
  add_common(gen_cmd, gen.o, true);
  gen_cmd->add_option("--count", gen.count, "number of samples");
  gen_cmd->add_option("--batch-size", gen.batch_size, "batch size of the batch-means statistics");
  gen_cmd->add_option("--bins", gen.bins, "histogram bins");
  gen_cmd->add_option("--out", gen.o.out, "dataset file")->required();

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate-fem", "run the analytical FE check suite");
  val_cmd->add_option("--grid", val.grid, "grid size");
  val_cmd->add_option("--samples", val.samples, "random microstructures for the sweep checks");
  val_cmd->add_option("--seed", val.seed, "seed of the sweep");
  val_cmd->add_option("--perturb", val.perturbation, "add this to K(0,0) of every element (test hook)");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "fit a linear or CNN surrogate");
  tr_cmd->add_option("kind", tr.kind, "linear or cnn")->required()->check(CLI::IsMember({"linear", "cnn"}));
  add_common(tr_cmd, tr.o, false);
  tr_cmd->add_option("--data", tr.data, "dataset file")->required();
  tr_cmd->add_option("--out", tr.o.out, "output directory");
  tr_cmd->add_option("--train-fraction", tr.train_fraction, "fraction of samples used for training");
  tr_cmd->add_option("--epochs", tr.epochs, "CNN epochs");
  tr_cmd->add_option("--batch-size", tr.batch_size, "CNN mini-batch size");
  tr_cmd->add_option("--learning-rate", tr.learning_rate, "Adam learning rate");

  OptimizeArgs opt;
  auto* opt_cmd = app.add_subcommand("optimize", "genetic-algorithm design search");
  add_common(opt_cmd, opt.o, true);
  opt_cmd->add_option("--oracle", opt.oracle, "model or fem")->required()->check(CLI::IsMember({"model", "fem"}));
  opt_cmd->add_option("--objective", opt.objective, "modulus, strength, toughness or aof")
      ->required()
      ->check(CLI::IsMember({"modulus", "strength", "toughness", "aof"}));
  opt_cmd->add_option("--model", opt.model, "CNN checkpoint or linear model directory");
  opt_cmd->add_option("--weights", opt.weights, "AOF weights w_m w_s w_t")->expected(3);
  opt_cmd->add_option("--normalizers", opt.normalizers, "AOF normalizers for modulus strength toughness")->expected(3);
  opt_cmd->add_option("--generation-size", opt.generation_size, "population size");
  opt_cmd->add_option("--max-generations", opt.max_generations, "generation limit");
  opt_cmd->add_option("--top-k", opt.top_k, "genomes to export");
  opt_cmd->add_option("--out", opt.o.out, "output directory");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "percentage-error report of a surrogate on a dataset");
  ev_cmd->add_option("--model", ev.model, "CNN checkpoint or linear model directory")->required();
  ev_cmd->add_option("--data", ev.data, "dataset file")->required();
  ev_cmd->add_option("--out", ev.out, "report CSV");
  ev_cmd->add_option("--subset", ev.subset, "all, train or test");
  ev_cmd->add_option("--train-fraction", ev.train_fraction, "split fraction used with --subset");
  ev_cmd->add_option("--seed", ev.seed, "split seed used with --subset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(ErrorCategory::Argument);
  }

  try {
    if (*gen_cmd) return gen_data(gen, out);
    if (*val_cmd) return validate_fem(val, out);
    if (*tr_cmd) return train(tr, out);
    if (*opt_cmd) return optimize(opt, out);
    if (*ev_cmd) return eval(ev, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace checkerboard::cli
