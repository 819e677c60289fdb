#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ladg/losses.hpp"
#include "ladg/matrix.hpp"

namespace ladg {

enum class Split { train, val, ood_test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// Multi-domain dataset with per-sample task labels, domain ids and split
// tags. OOD-test domains are disjoint from train domains by construction;
// validate() re-checks the invariant on loaded data.
struct DomainDataset {
  Matrix inputs;                // n x p
  std::vector<double> labels;   // class id (as double) or regression target
  std::vector<int> domains;     // in [0, n_domains)
  std::vector<Split> splits;
  TaskKind task_kind = TaskKind::classification;
  int n_domains = 0;
  int n_classes = 0;            // 0 for regression
  std::string descriptor;

  int size() const { return inputs.rows(); }
  int feature_dim() const { return inputs.cols(); }
  std::vector<int> rows_of(Split s) const;
  std::vector<int> domain_ids_of(Split s) const;  // sorted distinct
  std::vector<int> class_ids() const;             // classification only
  void validate() const;
};

// Two interleaved half-circles, centered at the origin so the two classes
// are exact negatives of each other; each domain is the same template
// rotated by its angle, plus Gaussian coordinate noise. The trailing
// n_ood_domains angles are reserved as OOD test domains; train domains also
// emit a smaller validation block.
struct MoonsParams {
  int n_per_domain = 128;  // train rows per domain; must be even
  std::vector<double> angles_deg = {0.0, 15.0, 30.0, 45.0, 60.0};
  int n_ood_domains = 1;
  double noise_sd = 0.08;
  std::uint64_t seed = 1;
};
DomainDataset gen_rotated_moons(const MoonsParams& params);

// Gaussian class clusters on a centered simplex (scaled by class_sep), with
// a per-(class, domain) offset of exact magnitude domain_shift_scale forming
// localized per-domain sub-clusters. collapsed_pairs forces the degenerate
// 4-domain geometry where domains {0,1} and {2,3} coincide pairwise but the
// pairs sit domain_shift_scale apart.
struct GaussianParams {
  int n_per_domain = 128;      // train rows per domain
  int n_classes = 3;
  int n_domains = 4;           // train domains
  double class_sep = 3.0;
  double domain_shift_scale = 1.0;
  std::uint64_t seed = 1;
  bool collapsed_pairs = false;
  int n_ood_domains = 1;
};
DomainDataset gen_shifted_gaussians(const GaussianParams& params);

// Loose feature table used by the analysis commands: f0..f{p-1} columns are
// required, label/domain/split are optional. label_column renames the label
// source (an explicitly named column must exist).
struct FeatureTable {
  Matrix features;
  std::optional<std::vector<double>> labels;
  std::optional<std::vector<int>> domains;
  std::optional<std::vector<Split>> splits;
};
FeatureTable load_feature_table(const std::string& path, const std::string& label_column = "label");

struct TabularSchema {
  std::string feature_prefix = "f";
  std::string label_column = "label";
  std::string domain_column = "domain";
  std::string split_column = "split";  // optional in the file
};

// Strict dataset loader: features + label + domain required, split optional
// (rows default to train). Task kind is inferred: all-integral labels mean
// classification.
DomainDataset load_tabular(const std::string& path, const TabularSchema& schema = {});
void save_tabular(const DomainDataset& dataset, const std::string& path);

// Feature dump written by the trainer: f0..f{d-1},label,domain.
void save_feature_dump(const Matrix& features, const std::vector<double>& labels,
                       const std::vector<int>& domains, bool integral_labels,
                       const std::string& path);

}  // namespace ladg
