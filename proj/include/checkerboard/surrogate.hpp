#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "checkerboard/cnn.hpp"
#include "checkerboard/ga.hpp"
#include "checkerboard/linear_model.hpp"

namespace checkerboard::surrogate {

std::vector<Microstructure> to_structures(std::span<const ga::Genome> genomes, GridSize grid);

/// Property models usable as GA oracles. The model is shared, not copied.
ga::PropertyModel cnn_property_model(std::shared_ptr<const cnn::CnnModel<float>> model);
ga::PropertyModel linear_property_model(std::array<linear::LinearModel, 3> models);

/// File names of the three per-property linear models inside a directory.
std::filesystem::path linear_model_path(const std::filesystem::path& dir, int property);
std::array<linear::LinearModel, 3> read_linear_models(const std::filesystem::path& dir);

/// A trained surrogate on disk: a CNN checkpoint file, or a directory holding
/// the three linear model CSVs.
struct LoadedSurrogate {
  GridSize grid{};
  ga::PropertyModel model;
  std::vector<fem::CompositeProperties> predict(std::span<const Microstructure> structures) const;
};
LoadedSurrogate load_surrogate(const std::filesystem::path& path);

/// Best value of each property from single-objective GA runs with `seed`,
/// used as AOF normalizers.
fem::CompositeProperties single_objective_maxima(const ga::PropertyModel& model, const ga::GaParams& params,
                                                 std::uint64_t seed);

ga::EvolutionResult optimize(const ga::PropertyModel& model, const ga::GaParams& params,
                             const ga::Objective& objective, std::uint64_t seed);

}  // namespace checkerboard::surrogate
