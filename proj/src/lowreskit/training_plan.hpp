#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lowreskit {

/// A dataset reference inside a plan: a label plus where the records live.
struct DatasetRef {
  std::string name;
  std::string path;
  std::size_t size = 0;

  bool operator==(const DatasetRef&) const = default;
};

/// One training stage. `init_from` is empty for the base checkpoint or names
/// an earlier stage whose weights seed this one.
struct TrainingStage {
  std::string name;
  std::vector<DatasetRef> datasets;
  std::string init_from;

  bool operator==(const TrainingStage&) const = default;
};

/// Declarative multi-stage training schedule. Stages run in order.
struct TrainingPlan {
  std::vector<TrainingStage> stages;

  bool operator==(const TrainingPlan&) const = default;

  /// Canonical text form (pretty JSON, fixed key order, trailing newline).
  std::string serialize() const;
  static TrainingPlan parse(std::string_view text);

  /// Every init_from must name an earlier stage.
  void validate() const;
};

}  // namespace lowreskit
