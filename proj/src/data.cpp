#include "ladg/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include "ladg/rng.hpp"

namespace ladg {

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::ood_test: return "ood";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "ood" || s == "ood_test" || s == "ood-test") return Split::ood_test;
  throw ParseError("unknown split tag '" + s + "'");
}

std::vector<int> DomainDataset::rows_of(Split s) const {
  std::vector<int> rows;
  for (int i = 0; i < size(); ++i) {
    if (splits[i] == s) rows.push_back(i);
  }
  return rows;
}

std::vector<int> DomainDataset::domain_ids_of(Split s) const {
  std::set<int> ids;
  for (int i = 0; i < size(); ++i) {
    if (splits[i] == s) ids.insert(domains[i]);
  }
  return {ids.begin(), ids.end()};
}

std::vector<int> DomainDataset::class_ids() const {
  if (task_kind != TaskKind::classification) {
    throw StateError("class_ids: dataset is not a classification task");
  }
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = static_cast<int>(labels[i]);
  return out;
}

void DomainDataset::validate() const {
  const std::size_t n = static_cast<std::size_t>(size());
  if (labels.size() != n || domains.size() != n || splits.size() != n) {
    throw SchemaError("dataset: column lengths disagree with input rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (domains[i] < 0 || domains[i] >= n_domains) {
      throw SchemaError("dataset: domain id out of range at row " + std::to_string(i));
    }
    if (task_kind == TaskKind::classification) {
      const double l = labels[i];
      if (l != std::floor(l) || l < 0 || l >= n_classes) {
        throw SchemaError("dataset: class label out of range at row " + std::to_string(i));
      }
    }
  }
  const auto train_ids = domain_ids_of(Split::train);
  const auto ood_ids = domain_ids_of(Split::ood_test);
  for (int d : ood_ids) {
    if (std::binary_search(train_ids.begin(), train_ids.end(), d)) {
      throw SchemaError("dataset: domain " + std::to_string(d) + " appears in both train and ood splits");
    }
  }
}

namespace {

void append_row(DomainDataset& ds, std::vector<double>& flat, const std::vector<double>& x,
                double label, int domain, Split split) {
  flat.insert(flat.end(), x.begin(), x.end());
  ds.labels.push_back(label);
  ds.domains.push_back(domain);
  ds.splits.push_back(split);
}

int validation_rows(int n_train) { return std::max(2, n_train / 4); }

}  // namespace

DomainDataset gen_rotated_moons(const MoonsParams& params) {
  const int n = params.n_per_domain;
  const int n_dom = static_cast<int>(params.angles_deg.size());
  if (n < 4 || n % 2 != 0) throw ConfigError("moons: n_per_domain must be even and >= 4");
  if (params.n_ood_domains < 1) throw ConfigError("moons: need at least one held-out angle");
  if (n_dom - params.n_ood_domains < 2) throw ConfigError("moons: need at least two training angles");
  if (params.noise_sd < 0) throw ConfigError("moons: noise_sd must be non-negative");

  DomainDataset ds;
  ds.task_kind = TaskKind::classification;
  ds.n_classes = 2;
  ds.n_domains = n_dom;
  {
    std::ostringstream desc;
    desc << "moons(n_per_domain=" << n << ",angles=";
    for (std::size_t i = 0; i < params.angles_deg.size(); ++i) {
      desc << (i ? "/" : "") << params.angles_deg[i];
    }
    desc << ",n_ood=" << params.n_ood_domains << ",noise_sd=" << params.noise_sd
         << ",seed=" << params.seed << ")";
    ds.descriptor = desc.str();
  }

  std::vector<double> flat;
  const int first_ood = n_dom - params.n_ood_domains;
  for (int dom = 0; dom < n_dom; ++dom) {
    const double theta = params.angles_deg[dom] * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    Rng rng = Rng::derive(params.seed, "moons/domain/" + std::to_string(dom));
    const Split split = dom >= first_ood ? Split::ood_test : Split::train;
    auto emit_block = [&](int rows, Split tag) {
      const int per_class = rows / 2;
      for (int cls = 0; cls < 2; ++cls) {
        for (int i = 0; i < per_class; ++i) {
          const double t = std::numbers::pi * (i + 0.5) / per_class;
          // template centered at the origin; class 1 is the exact negative
          double x = std::cos(t) - 0.5;
          double y = std::sin(t) - 0.25;
          if (cls == 1) {
            x = -x;
            y = -y;
          }
          const double rx = c * x - s * y;
          const double ry = s * x + c * y;
          std::vector<double> point = {rx + params.noise_sd * rng.normal(),
                                       ry + params.noise_sd * rng.normal()};
          append_row(ds, flat, point, cls, dom, tag);
        }
      }
    };
    emit_block(n, split);
    if (split == Split::train) {
      int n_val = validation_rows(n);
      if (n_val % 2 != 0) ++n_val;
      emit_block(n_val, Split::val);
    }
  }
  ds.inputs = Matrix(static_cast<int>(ds.labels.size()), 2, std::move(flat));
  ds.validate();
  return ds;
}

DomainDataset gen_shifted_gaussians(const GaussianParams& params) {
  if (params.n_per_domain < 1 || params.n_classes < 2 || params.n_domains < 1) {
    throw ConfigError("gaussians: counts must be positive (and n_classes >= 2)");
  }
  if (!(params.class_sep > 0) || params.domain_shift_scale < 0) {
    throw ConfigError("gaussians: scales must be positive");
  }
  if (params.collapsed_pairs && params.n_domains != 4) {
    throw ConfigError("gaussians: collapsed_pairs requires exactly 4 training domains");
  }
  if (params.n_ood_domains < 0) throw ConfigError("gaussians: n_ood_domains must be >= 0");

  const int C = params.n_classes;
  const int p = std::max(4, C);
  const int total_domains = params.n_domains + params.n_ood_domains;
  const double within_sd = 0.1;  // sub-cluster spread, small against class_sep

  DomainDataset ds;
  ds.task_kind = TaskKind::classification;
  ds.n_classes = C;
  ds.n_domains = total_domains;
  {
    std::ostringstream desc;
    desc << "gaussians(n_per_domain=" << params.n_per_domain << ",n_classes=" << C
         << ",n_domains=" << params.n_domains << ",class_sep=" << params.class_sep
         << ",shift=" << params.domain_shift_scale << ",collapsed_pairs=" << params.collapsed_pairs
         << ",n_ood=" << params.n_ood_domains << ",seed=" << params.seed << ")";
    ds.descriptor = desc.str();
  }

  // class means: centered simplex vertices scaled by class_sep
  std::vector<std::vector<double>> class_means(C, std::vector<double>(p, 0.0));
  for (int cls = 0; cls < C; ++cls) {
    for (int j = 0; j < C; ++j) {
      class_means[cls][j] = params.class_sep * ((j == cls ? 1.0 : 0.0) - 1.0 / C);
    }
  }

  // per-(class, domain) offsets of exact magnitude domain_shift_scale
  Rng offset_rng = Rng::derive(params.seed, "gaussians/offsets");
  auto unit_direction = [&]() {
    std::vector<double> v(p);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : v) {
        x = offset_rng.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
    } while (!(norm > 1e-12));
    for (double& x : v) x /= norm;
    return v;
  };
  std::vector<std::vector<std::vector<double>>> offsets(
      C, std::vector<std::vector<double>>(total_domains, std::vector<double>(p, 0.0)));
  for (int cls = 0; cls < C; ++cls) {
    if (params.collapsed_pairs) {
      const std::vector<double> v = unit_direction();
      for (int j = 0; j < p; ++j) {
        const double half = 0.5 * params.domain_shift_scale * v[j];
        offsets[cls][0][j] = half;
        offsets[cls][1][j] = half;
        offsets[cls][2][j] = -half;
        offsets[cls][3][j] = -half;
      }
      for (int dom = 4; dom < total_domains; ++dom) {
        const std::vector<double> w = unit_direction();
        for (int j = 0; j < p; ++j) offsets[cls][dom][j] = params.domain_shift_scale * w[j];
      }
    } else {
      for (int dom = 0; dom < total_domains; ++dom) {
        const std::vector<double> w = unit_direction();
        for (int j = 0; j < p; ++j) offsets[cls][dom][j] = params.domain_shift_scale * w[j];
      }
    }
  }

  std::vector<double> flat;
  for (int dom = 0; dom < total_domains; ++dom) {
    Rng rng = Rng::derive(params.seed, "gaussians/domain/" + std::to_string(dom));
    const Split split = dom >= params.n_domains ? Split::ood_test : Split::train;
    auto emit_block = [&](int rows, Split tag) {
      for (int i = 0; i < rows; ++i) {
        const int cls = i % C;
        std::vector<double> x(p);
        for (int j = 0; j < p; ++j) {
          x[j] = class_means[cls][j] + offsets[cls][dom][j] + within_sd * rng.normal();
        }
        append_row(ds, flat, x, cls, dom, tag);
      }
    };
    emit_block(params.n_per_domain, split);
    if (split == Split::train) emit_block(validation_rows(params.n_per_domain), Split::val);
  }
  ds.inputs = Matrix(static_cast<int>(ds.labels.size()), p, std::move(flat));
  ds.validate();
  return ds;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
  if (field.empty()) throw ParseError("empty numeric field", line_no);
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw ParseError("malformed numeric field '" + field + "'", line_no);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + field + "'", line_no);
  return v;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> numeric;  // per data row, numeric columns only
  std::vector<std::string> split_tags;       // empty when no split column
  std::vector<std::size_t> line_numbers;     // 1-based source line per data row
  int split_col = -1;
};

RawTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "': empty file");
  ++line_no;
  table.header = split_line(line);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "split") table.split_col = static_cast<int>(c);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw ParseError("expected " + std::to_string(table.header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (static_cast<int>(c) == table.split_col) {
        table.split_tags.push_back(fields[c]);
      } else {
        row.push_back(parse_number(fields[c], line_no));
      }
    }
    table.numeric.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  return table;
}

// column index within the numeric-only row layout
int numeric_index(const RawTable& table, int header_col) {
  int idx = 0;
  for (int c = 0; c < header_col; ++c) {
    if (c != table.split_col) ++idx;
  }
  return idx;
}

}  // namespace

FeatureTable load_feature_table(const std::string& path, const std::string& label_column) {
  RawTable raw = read_csv(path);
  if (raw.numeric.empty()) throw SchemaError("'" + path + "': no data rows");

  int label_col = -1, domain_col = -1;
  std::vector<int> feature_cols;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    const std::string& name = raw.header[c];
    if (name == label_column) {
      label_col = static_cast<int>(c);
    } else if (name == "domain") {
      domain_col = static_cast<int>(c);
    } else if (name.size() > 1 && name[0] == 'f' &&
               name.find_first_not_of("0123456789", 1) == std::string::npos) {
      feature_cols.push_back(static_cast<int>(c));
    } else if (static_cast<int>(c) != raw.split_col) {
      throw SchemaError("'" + path + "': unexpected column '" + name + "'");
    }
  }
  if (label_column != "label" && label_col < 0) {
    throw SchemaError("'" + path + "': requested label column '" + label_column + "' not found");
  }
  const int p = static_cast<int>(feature_cols.size());
  if (p == 0) throw SchemaError("'" + path + "': no feature columns (expected f0..f{p-1})");
  for (int j = 0; j < p; ++j) {
    if (raw.header[feature_cols[j]] != "f" + std::to_string(j)) {
      throw SchemaError("'" + path + "': feature columns must be contiguous f0..f" + std::to_string(p - 1));
    }
  }

  FeatureTable out;
  const int n = static_cast<int>(raw.numeric.size());
  out.features = Matrix(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) out.features(i, j) = raw.numeric[i][numeric_index(raw, feature_cols[j])];
  }
  if (label_col >= 0) {
    std::vector<double> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = raw.numeric[i][numeric_index(raw, label_col)];
    out.labels = std::move(labels);
  }
  if (domain_col >= 0) {
    std::vector<int> domains(n);
    for (int i = 0; i < n; ++i) {
      const double v = raw.numeric[i][numeric_index(raw, domain_col)];
      if (v != std::floor(v) || v < 0) {
        throw ParseError("domain ids must be non-negative integers", raw.line_numbers[i]);
      }
      domains[i] = static_cast<int>(v);
    }
    out.domains = std::move(domains);
  }
  if (raw.split_col >= 0) {
    std::vector<Split> splits(n);
    for (int i = 0; i < n; ++i) {
      try {
        splits[i] = split_from_string(raw.split_tags[i]);
      } catch (const ParseError&) {
        throw ParseError("unknown split tag '" + raw.split_tags[i] + "'", raw.line_numbers[i]);
      }
    }
    out.splits = std::move(splits);
  }
  return out;
}

DomainDataset load_tabular(const std::string& path, const TabularSchema& schema) {
  (void)schema;  // column names are fixed by the documented format
  FeatureTable table = load_feature_table(path);
  if (!table.labels) throw SchemaError("'" + path + "': missing label column");
  if (!table.domains) throw SchemaError("'" + path + "': missing domain column");

  DomainDataset ds;
  ds.inputs = std::move(table.features);
  ds.labels = std::move(*table.labels);
  ds.domains = std::move(*table.domains);
  ds.splits = table.splits ? std::move(*table.splits)
                           : std::vector<Split>(ds.labels.size(), Split::train);
  ds.descriptor = "tabular(" + path + ")";

  bool integral = true;
  double max_label = 0.0;
  for (double l : ds.labels) {
    if (l != std::floor(l) || l < 0) integral = false;
    max_label = std::max(max_label, l);
  }
  if (integral) {
    ds.task_kind = TaskKind::classification;
    ds.n_classes = static_cast<int>(max_label) + 1;
  } else {
    ds.task_kind = TaskKind::regression;
    ds.n_classes = 0;
  }
  int max_domain = 0;
  for (int d : ds.domains) max_domain = std::max(max_domain, d);
  ds.n_domains = max_domain + 1;
  ds.validate();
  return ds;
}

namespace {

void write_value(std::FILE* f, double v) { std::fprintf(f, "%.17g", v); }

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void save_tabular(const DomainDataset& dataset, const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "w"));
  if (!f) throw ParseError("cannot write '" + path + "'");
  const int p = dataset.feature_dim();
  for (int j = 0; j < p; ++j) std::fprintf(f.get(), "f%d,", j);
  std::fprintf(f.get(), "label,domain,split\n");
  const bool integral = dataset.task_kind == TaskKind::classification;
  for (int i = 0; i < dataset.size(); ++i) {
    for (int j = 0; j < p; ++j) {
      write_value(f.get(), dataset.inputs(i, j));
      std::fputc(',', f.get());
    }
    if (integral) {
      std::fprintf(f.get(), "%d", static_cast<int>(dataset.labels[i]));
    } else {
      write_value(f.get(), dataset.labels[i]);
    }
    std::fprintf(f.get(), ",%d,%s\n", dataset.domains[i], to_string(dataset.splits[i]).c_str());
  }
}

void save_feature_dump(const Matrix& features, const std::vector<double>& labels,
                       const std::vector<int>& domains, bool integral_labels,
                       const std::string& path) {
  if (static_cast<int>(labels.size()) != features.rows() ||
      static_cast<int>(domains.size()) != features.rows()) {
    throw ShapeError("save_feature_dump: column lengths disagree");
  }
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "w"));
  if (!f) throw ParseError("cannot write '" + path + "'");
  for (int j = 0; j < features.cols(); ++j) std::fprintf(f.get(), "f%d,", j);
  std::fprintf(f.get(), "label,domain\n");
  for (int i = 0; i < features.rows(); ++i) {
    for (int j = 0; j < features.cols(); ++j) {
      write_value(f.get(), features(i, j));
      std::fputc(',', f.get());
    }
    if (integral_labels) {
      std::fprintf(f.get(), "%d", static_cast<int>(labels[i]));
    } else {
      write_value(f.get(), labels[i]);
    }
    std::fprintf(f.get(), ",%d\n", domains[i]);
  }
}

}  // namespace ladg
