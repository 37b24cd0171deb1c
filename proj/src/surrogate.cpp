#include "checkerboard/surrogate.hpp"

#include <fstream>

#include "checkerboard/error.hpp"

namespace checkerboard::surrogate {

std::vector<Microstructure> to_structures(std::span<const ga::Genome> genomes, GridSize grid) {
  std::vector<Microstructure> out;
  out.reserve(genomes.size());
  for (const auto& g : genomes) out.emplace_back(grid, g);
  return out;
}

ga::PropertyModel cnn_property_model(std::shared_ptr<const cnn::CnnModel<float>> model) {
  if (!model) throw ArgumentError("null CNN model");
  const GridSize grid{model->config().width, model->config().height};
  return [model, grid](std::span<const ga::Genome> genomes) {
    const auto structures = to_structures(genomes, grid);
    return model->predict(std::span<const Microstructure>(structures));
  };
}

ga::PropertyModel linear_property_model(std::array<linear::LinearModel, 3> models) {
  const GridSize grid = models[0].grid;
  for (const auto& m : models)
    if (m.grid != grid) throw ArgumentError("linear models disagree on the grid");
  return [models = std::move(models), grid](std::span<const ga::Genome> genomes) {
    std::vector<fem::CompositeProperties> out;
    out.reserve(genomes.size());
    for (const auto& g : genomes) {
      const Microstructure m(grid, g);
      out.push_back({linear::predict(models[0], m), linear::predict(models[1], m), linear::predict(models[2], m)});
    }
    return out;
  };
}

std::filesystem::path linear_model_path(const std::filesystem::path& dir, int property) {
  return dir / (std::string("linear_") + data::kPropertyNames[static_cast<std::size_t>(property)] + ".csv");
}

std::array<linear::LinearModel, 3> read_linear_models(const std::filesystem::path& dir) {
  std::array<linear::LinearModel, 3> models;
  for (int k = 0; k < 3; ++k) models[static_cast<std::size_t>(k)] = linear::read_model_csv(linear_model_path(dir, k), k);
  return models;
}

std::vector<fem::CompositeProperties> LoadedSurrogate::predict(std::span<const Microstructure> structures) const {
  std::vector<ga::Genome> genomes;
  genomes.reserve(structures.size());
  for (const auto& s : structures) {
    if (s.grid() != grid) throw ArgumentError("microstructure grid does not match the model");
    genomes.emplace_back(s.bits().begin(), s.bits().end());
  }
  return model(genomes);
}

LoadedSurrogate load_surrogate(const std::filesystem::path& path) {
  LoadedSurrogate s;
  if (std::filesystem::is_directory(path)) {
    auto models = read_linear_models(path);
    s.grid = models[0].grid;
    s.model = linear_property_model(std::move(models));
    return s;
  }
  auto model = std::make_shared<const cnn::CnnModel<float>>(cnn::read_checkpoint<float>(path));
  s.grid = {model->config().width, model->config().height};
  s.model = cnn_property_model(std::move(model));
  return s;
}

ga::EvolutionResult optimize(const ga::PropertyModel& model, const ga::GaParams& params,
                             const ga::Objective& objective, std::uint64_t seed) {
  ga::ObjectiveOracle oracle(model, objective);
  return ga::evolve(params, oracle, domain_seed(seed, "ga"));
}

fem::CompositeProperties single_objective_maxima(const ga::PropertyModel& model, const ga::GaParams& params,
                                                 std::uint64_t seed) {
  fem::CompositeProperties maxima;
  for (auto p : {ga::Property::Modulus, ga::Property::Strength, ga::Property::Toughness}) {
    const double best = optimize(model, params, ga::Objective{p, std::nullopt}, seed).best_fitness;
    if (p == ga::Property::Modulus) maxima.modulus = best;
    if (p == ga::Property::Strength) maxima.strength = best;
    if (p == ga::Property::Toughness) maxima.toughness = best;
  }
  return maxima;
}

}  // namespace checkerboard::surrogate
