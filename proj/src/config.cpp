#include "checkerboard/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "checkerboard/error.hpp"

namespace checkerboard {
namespace {

using Json = nlohmann::json;

void reject_unknown(const Json& object, std::initializer_list<const char*> known, const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : object.items())
    if (!allowed.contains(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
void read(const Json& object, const char* key, T& target, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

void read_material(const Json& j, fem::ElasticMaterial& m, const std::string& where) {
  reject_unknown(j, {"youngs_modulus", "poisson_ratio", "failure_strain"}, where);
  read(j, "youngs_modulus", m.youngs_modulus, where);
  read(j, "poisson_ratio", m.poisson_ratio, where);
  read(j, "failure_strain", m.failure_strain, where);
}

std::array<double, 3> read_triple(const Json& j, const char* key, const std::string& where) {
  std::vector<double> v;
  read(j, key, v, where);
  if (v.size() != 3) throw ConfigError("'" + std::string(key) + "' in " + where + " needs three values");
  return {v[0], v[1], v[2]};
}

}  // namespace

GridSize parse_grid(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw ArgumentError("grid must look like WIDTHxHEIGHT, got '" + text + "'");
  GridSize g;
  try {
    std::size_t used = 0;
    g.width = std::stoi(text.substr(0, x), &used);
    if (used != x) throw ArgumentError("bad grid width");
    const std::string h = text.substr(x + 1);
    g.height = std::stoi(h, &used);
    if (used != h.size()) throw ArgumentError("bad grid height");
  } catch (const std::logic_error&) {
    throw ArgumentError("grid must look like WIDTHxHEIGHT, got '" + text + "'");
  }
  validate_grid(g);
  return g;
}

std::string grid_name(GridSize grid) {
  return std::to_string(grid.width) + "x" + std::to_string(grid.height);
}

void RunConfig::validate() const {
  try {
    validate_grid(grid);
    materials.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (dataset.count < 1) throw ConfigError("dataset count must be >= 1");
  if (dataset.stats_batch_size < 1) throw ConfigError("stats batch size must be >= 1");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction <= 1.0))
    throw ConfigError("train fraction must lie in (0, 1]");
  train.validate();
  ga::GaParams p = optimize.params;
  p.gene_count = grid.elements();
  p.validate();
  if (optimize.top_k < 1) throw ConfigError("top_k must be >= 1");
  optimize.aof.validate_weights();
}

RunConfig parse_config(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, {"grid", "seed", "workers", "output_dir", "materials", "dataset", "train", "ga", "aof"}, "config");

  RunConfig c;
  if (root.contains("grid")) {
    std::string g;
    read(root, "grid", g, "config");
    try {
      c.grid = parse_grid(g);
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  }
  read(root, "seed", c.seed, "config");
  read(root, "workers", c.workers, "config");
  if (root.contains("output_dir")) {
    std::string dir;
    read(root, "output_dir", dir, "config");
    c.output_dir = dir;
  }
  if (root.contains("materials")) {
    const Json& m = root["materials"];
    reject_unknown(m, {"stiff", "soft"}, "materials");
    if (m.contains("stiff")) read_material(m["stiff"], c.materials.stiff, "materials.stiff");
    if (m.contains("soft")) read_material(m["soft"], c.materials.soft, "materials.soft");
  }
  if (root.contains("dataset")) {
    const Json& d = root["dataset"];
    reject_unknown(d, {"count", "stats_batch_size", "train_fraction"}, "dataset");
    read(d, "count", c.dataset.count, "dataset");
    read(d, "stats_batch_size", c.dataset.stats_batch_size, "dataset");
    read(d, "train_fraction", c.dataset.train_fraction, "dataset");
  }
  if (root.contains("train")) {
    const Json& t = root["train"];
    reject_unknown(t, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon"}, "train");
    read(t, "epochs", c.train.epochs, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "learning_rate", c.train.learning_rate, "train");
    read(t, "beta1", c.train.beta1, "train");
    read(t, "beta2", c.train.beta2, "train");
    read(t, "epsilon", c.train.adam_epsilon, "train");
  }
  if (root.contains("ga")) {
    const Json& g = root["ga"];
    reject_unknown(g, {"generation_size", "max_generations", "crossover_probability", "mutation_probability",
                       "elitism_ratio", "stagnation_generations", "stagnation_tolerance", "top_k"},
                   "ga");
    auto& p = c.optimize.params;
    read(g, "generation_size", p.generation_size, "ga");
    read(g, "max_generations", p.max_generations, "ga");
    read(g, "crossover_probability", p.crossover_probability, "ga");
    read(g, "mutation_probability", p.mutation_probability, "ga");
    read(g, "elitism_ratio", p.elitism_ratio, "ga");
    read(g, "stagnation_generations", p.stagnation_generations, "ga");
    read(g, "stagnation_tolerance", p.stagnation_tolerance, "ga");
    read(g, "top_k", c.optimize.top_k, "ga");
  }
  if (root.contains("aof")) {
    const Json& a = root["aof"];
    reject_unknown(a, {"weights", "exponent", "normalizers"}, "aof");
    if (a.contains("weights")) {
      const auto w = read_triple(a, "weights", "aof");
      c.optimize.aof.modulus = w[0];
      c.optimize.aof.strength = w[1];
      c.optimize.aof.toughness = w[2];
    }
    read(a, "exponent", c.optimize.aof.exponent, "aof");
    if (a.contains("normalizers")) {
      const auto n = read_triple(a, "normalizers", "aof");
      c.optimize.aof.normalizers = fem::CompositeProperties{n[0], n[1], n[2]};
    }
  }
  c.optimize.params.gene_count = c.grid.elements();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace checkerboard
