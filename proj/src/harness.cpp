#include "saak/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "saak/errors.hpp"
#include "saak/parallel.hpp"
#include "saak/version.hpp"

namespace saak {
namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string fmt_pct(double fraction) { return fmt("%.2f", fraction * 100.0); }
std::string fmt_sim(double v) { return fmt("%.4f", v); }

std::string join_counts(const std::vector<std::size_t>& counts) {
  std::string s = "(";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) s += " ";
    s += std::to_string(counts[i]);
  }
  return s + ")";
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_same_v<T, double>) {
      s += fmt("%g", xs[i]);
    } else {
      s += std::to_string(xs[i]);
    }
  }
  return s;
}

struct LoadedData {
  Dataset train;
  Dataset test;
};

LoadedData load_data(const ExperimentConfig& cfg) {
  LoadedData d;
  d.train = pad_dataset(load_idx(cfg.train_images, cfg.train_labels), cfg.pad_side);
  d.test = pad_dataset(load_idx(cfg.test_images, cfg.test_labels), cfg.pad_side);
  return d;
}

Dataset maybe_subset(const Dataset& full, std::size_t size, std::uint64_t seed) {
  if (size == 0 || size >= full.size()) return full;
  return subset(full, size, seed);
}

CascadePolicy base_policy(const ExperimentConfig& cfg) {
  if (!cfg.keep_counts.empty()) return CascadePolicy::lossy_counts(cfg.keep_counts);
  return CascadePolicy::lossy_energy(cfg.tau);
}

double matrix_accuracy(const LinearModel& model, const Matrix& reduced,
                       std::span<const int> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < reduced.rows; ++i) {
    if (model.predict(reduced.row(i)) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(reduced.rows);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (train_images.empty() || train_labels.empty() || test_images.empty() ||
      test_labels.empty()) {
    throw std::invalid_argument("config: dataset paths required");
  }
  if (stages < 1 || pad_side != (1 << stages)) {
    throw std::invalid_argument("config: pad_side must equal 2^stages");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("config: tau outside (0,1)");
  for (double t : taus) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("config: tau grid outside (0,1)");
  }
  if (!(anova_keep > 0.0 && anova_keep <= 1.0)) {
    throw std::invalid_argument("config: anova_keep outside (0,1]");
  }
  if (reduced_dim < 1) throw std::invalid_argument("config: reduced_dim < 1");
  if (reduced_dims.empty()) throw std::invalid_argument("config: empty reduced_dims");
  if (robustness_dim < 1) throw std::invalid_argument("config: robustness_dim < 1");
  if (!keep_counts.empty() && keep_counts.size() != static_cast<std::size_t>(stages)) {
    throw std::invalid_argument("config: keep_counts length != stages");
  }
  for (int c : class_counts) {
    if (c < 1) throw std::invalid_argument("config: class count < 1");
  }
}

std::map<std::string, std::string> ExperimentConfig::resolved() const {
  std::map<std::string, std::string> m;
  m["train_images"] = train_images;
  m["train_labels"] = train_labels;
  m["test_images"] = test_images;
  m["test_labels"] = test_labels;
  m["out_dir"] = out_dir;
  m["stages"] = std::to_string(stages);
  m["pad_side"] = std::to_string(pad_side);
  m["tau"] = fmt("%g", tau);
  m["keep_counts"] = join_list(keep_counts);
  m["anova_keep"] = fmt("%g", anova_keep);
  m["reduced_dim"] = std::to_string(reduced_dim);
  m["reduced_dims"] = join_list(reduced_dims);
  m["taus"] = join_list(taus);
  m["include_lossless"] = include_lossless ? "1" : "0";
  m["kernel_train_size"] = std::to_string(kernel_train_size);
  m["classifier_train_size"] = std::to_string(classifier_train_size);
  m["subset_sizes"] = join_list(subset_sizes);
  m["class_counts"] = join_list(class_counts);
  m["lambda"] = fmt("%g", classifier.lambda);
  m["epochs"] = std::to_string(classifier.epochs);
  m["clf_seed"] = std::to_string(classifier.seed);
  m["oracle_classifier"] = oracle_classifier ? "1" : "0";
  m["robustness_dim"] = std::to_string(robustness_dim);
  m["noise_sigma"] = fmt("%g", noise_sigma);
  m["seed"] = std::to_string(seed);
  m["noise_seed"] = std::to_string(noise_seed);
  m["threads"] = std::to_string(threads);
  m["version"] = kVersion;
  return m;
}

std::string TableResult::csv() const {
  std::ostringstream out;
  for (const std::string& line : metadata) out << "# " << line << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ",";
    out << header[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << row[i];
    }
    out << "\n";
  }
  return out.str();
}

std::string TableResult::pretty() const {
  std::vector<std::size_t> widths(header.size(), 0);
  auto grow = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i) {
      widths[i] = std::max(widths[i], row[i].size());
    }
  };
  grow(header);
  for (const auto& row : rows) grow(row);
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      out << row[i];
      for (std::size_t p = row[i].size(); p < widths[i]; ++p) out << ' ';
    }
    out << "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out.str();
}

void write_table(const TableResult& table, const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out << table.csv();
  if (!out) throw IoError("write failed for " + path);
}

namespace {

std::vector<std::string> config_metadata(const ExperimentConfig& cfg) {
  std::vector<std::string> lines;
  for (const auto& [k, v] : cfg.resolved()) lines.push_back(k + "=" + v);
  return lines;
}

}  // namespace

std::vector<int> dataset_labels(const Dataset& data) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const Image& img : data.images) labels.push_back(img.label);
  return labels;
}

AnovaRanking fit_anova_over(const Dataset& data, const SaakCascade& cascade,
                            double keep_fraction, unsigned threads) {
  const FeatureLayout layout = FeatureLayout::from(cascade);
  std::vector<AnovaAccumulator> accs;
  const unsigned n_workers = std::max(1u, threads);
  for (unsigned t = 0; t < n_workers; ++t) {
    accs.emplace_back(layout.size(), data.class_count);
  }
  parallel_for(0, data.size(), n_workers,
               [&](std::size_t lo, std::size_t hi, unsigned worker) {
                 for (std::size_t i = lo; i < hi; ++i) {
                   const Image& img = data.images[i];
                   const std::vector<double> flat =
                       flatten(forward_cascade(img, cascade));
                   accs[worker].add(flat, img.label);
                 }
               });
  for (unsigned t = 1; t < n_workers; ++t) accs[0].merge(accs[t]);
  return accs[0].finish(keep_fraction);
}

Matrix extract_selected(const Dataset& data, const SaakCascade& cascade,
                        const AnovaRanking& ranking, unsigned threads) {
  Matrix out(data.size(), ranking.selected.size());
  parallel_for(0, data.size(), std::max(1u, threads),
               [&](std::size_t lo, std::size_t hi, unsigned) {
                 for (std::size_t i = lo; i < hi; ++i) {
                   const std::vector<double> flat =
                       flatten(forward_cascade(data.images[i], cascade));
                   const std::vector<double> sel = apply_selection(ranking, flat);
                   std::copy(sel.begin(), sel.end(), out.row(i).begin());
                 }
               });
  return out;
}

TrainedChain train_chain(const Dataset& kernel_train, const Dataset& clf_train,
                         const CascadePolicy& policy, int stages, double anova_keep,
                         std::size_t reduced_dim, const ClassifierConfig& cc,
                         unsigned threads) {
  TrainedChain chain;
  chain.cascade = fit_cascade(kernel_train, stages, policy);
  chain.pipeline.layout = FeatureLayout::from(chain.cascade);
  chain.pipeline.ranking = fit_anova_over(clf_train, chain.cascade, anova_keep, threads);
  const Matrix selected =
      extract_selected(clf_train, chain.cascade, chain.pipeline.ranking, threads);
  chain.pipeline.reducer = fit_reducer(selected, reduced_dim);
  const Matrix reduced = apply_reducer_matrix(chain.pipeline.reducer, selected);
  const std::vector<int> labels = dataset_labels(clf_train);
  chain.model = train_classifier(reduced, labels, clf_train.class_count, cc);
  return chain;
}

TableResult run_table1(const ExperimentConfig& cfg) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const Dataset kernel_train = maybe_subset(data.train, cfg.kernel_train_size, cfg.seed);
  const Dataset clf_train =
      maybe_subset(data.train, cfg.classifier_train_size, cfg.seed + 1);
  const std::vector<int> test_labels = dataset_labels(data.test);
  const std::vector<int> train_labels = dataset_labels(clf_train);

  std::vector<std::pair<std::string, CascadePolicy>> policies;
  if (cfg.include_lossless) policies.emplace_back("all", CascadePolicy::lossless());
  for (double t : cfg.taus) {
    policies.emplace_back(fmt("%g%%", t * 100.0), CascadePolicy::lossy_energy(t));
  }

  TableResult table;
  table.metadata = config_metadata(cfg);
  table.metadata.push_back("table=1");
  table.header = {"policy", "kernels"};
  for (std::size_t d : cfg.reduced_dims) table.header.push_back(std::to_string(d));

  const std::size_t dim_max =
      *std::max_element(cfg.reduced_dims.begin(), cfg.reduced_dims.end());

  for (const auto& [label, policy] : policies) {
    const SaakCascade cascade = fit_cascade(kernel_train, cfg.stages, policy);
    std::vector<std::string> row = {label, join_counts(cascade.kept_counts())};
    if (cfg.oracle_classifier) {
      // Plumbing check: grid mechanics with a predictor that is always right.
      const double acc = accuracy([](const Image& img) { return img.label; }, data.test);
      for (std::size_t i = 0; i < cfg.reduced_dims.size(); ++i) {
        row.push_back(fmt_pct(acc));
      }
      table.rows.push_back(std::move(row));
      continue;
    }
    const AnovaRanking ranking =
        fit_anova_over(clf_train, cascade, cfg.anova_keep, cfg.threads);
    const Matrix train_sel = extract_selected(clf_train, cascade, ranking, cfg.threads);
    const Matrix test_sel = extract_selected(data.test, cascade, ranking, cfg.threads);
    const Reducer reducer_full = fit_reducer(train_sel, dim_max);
    for (std::size_t d : cfg.reduced_dims) {
      const Reducer red = reducer_prefix(reducer_full, d);
      const Matrix train_red = apply_reducer_matrix(red, train_sel);
      const LinearModel model = train_classifier(train_red, train_labels,
                                                 clf_train.class_count, cfg.classifier);
      const Matrix test_red = apply_reducer_matrix(red, test_sel);
      row.push_back(fmt_pct(matrix_accuracy(model, test_red, test_labels)));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

TableResult run_similarity_vs_size(const ExperimentConfig& cfg) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const SaakCascade reference =
      fit_cascade(data.train, cfg.stages, base_policy(cfg));
  // Subset cascades refit with the reference's kept counts so per-stage
  // kernel geometry stays comparable.
  const CascadePolicy pinned = CascadePolicy::lossy_counts(reference.kept_counts());

  std::vector<std::size_t> sizes = cfg.subset_sizes;
  std::sort(sizes.begin(), sizes.end(), std::greater<>());

  TableResult table;
  table.metadata = config_metadata(cfg);
  table.metadata.push_back("table=2");
  table.metadata.push_back("reference_kernels=" + join_counts(reference.kept_counts()));
  table.header = {"size"};
  for (int p = 1; p <= cfg.stages; ++p) table.header.push_back("stage" + std::to_string(p));

  auto emit_row = [&](std::size_t size, const SaakCascade& cascade) {
    const SimilarityReport rep = kernel_similarity(cascade, reference);
    std::vector<std::string> row = {std::to_string(size)};
    for (double s : rep.per_stage) row.push_back(fmt_sim(s));
    table.rows.push_back(std::move(row));
  };

  emit_row(data.train.size(), reference);
  for (std::size_t size : sizes) {
    if (size >= data.train.size()) continue;
    const Dataset sub = subset(data.train, size, cfg.seed);
    emit_row(size, fit_cascade(sub, cfg.stages, pinned));
  }
  return table;
}

TableResult run_accuracy_vs_kernel_size(const ExperimentConfig& cfg) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const Dataset& clf_train = data.train;  // pipeline + classifier on the full set
  const std::vector<int> test_labels = dataset_labels(data.test);

  std::vector<std::size_t> sizes = {data.train.size()};
  for (std::size_t s : cfg.subset_sizes) {
    if (s < data.train.size()) sizes.push_back(s);
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());

  TableResult table;
  table.metadata = config_metadata(cfg);
  table.metadata.push_back("table=3");
  table.metadata.push_back(
      "note=this sweep uses 50000 where earlier reports of it list 5000; "
      "that entry is treated as a typo for 50000");
  table.header = {"size", "kernels", "accuracy"};

  for (std::size_t size : sizes) {
    const Dataset kernel_train =
        size >= data.train.size() ? data.train : subset(data.train, size, cfg.seed);
    const TrainedChain chain =
        train_chain(kernel_train, clf_train, base_policy(cfg), cfg.stages,
                    cfg.anova_keep, cfg.reduced_dim, cfg.classifier, cfg.threads);
    const Matrix test_sel = extract_selected(data.test, chain.cascade,
                                             chain.pipeline.ranking, cfg.threads);
    const Matrix test_red = apply_reducer_matrix(chain.pipeline.reducer, test_sel);
    table.rows.push_back({std::to_string(size),
                          join_counts(chain.cascade.kept_counts()),
                          fmt_pct(matrix_accuracy(chain.model, test_red, test_labels))});
  }
  return table;
}

TableResult run_class_scalability(const ExperimentConfig& cfg) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const Dataset kernel_base = maybe_subset(data.train, cfg.kernel_train_size, cfg.seed);
  const Dataset& clf_train = data.train;
  const std::vector<int> test_labels = dataset_labels(data.test);

  const SaakCascade reference = fit_cascade(kernel_base, cfg.stages, base_policy(cfg));
  const CascadePolicy pinned = CascadePolicy::lossy_counts(reference.kept_counts());

  std::vector<int> class_counts = cfg.class_counts;
  std::sort(class_counts.begin(), class_counts.end(), std::greater<>());

  TableResult table;
  table.metadata = config_metadata(cfg);
  table.metadata.push_back("table=4");
  table.metadata.push_back("reference_kernels=" + join_counts(reference.kept_counts()));
  table.header = {"classes"};
  for (int p = 1; p <= cfg.stages; ++p) table.header.push_back("stage" + std::to_string(p));
  table.header.push_back("accuracy");

  auto evaluate = [&](const SaakCascade& cascade) {
    const AnovaRanking ranking =
        fit_anova_over(clf_train, cascade, cfg.anova_keep, cfg.threads);
    const Matrix train_sel = extract_selected(clf_train, cascade, ranking, cfg.threads);
    const Reducer reducer = fit_reducer(train_sel, cfg.reduced_dim);
    const Matrix train_red = apply_reducer_matrix(reducer, train_sel);
    const LinearModel model =
        train_classifier(train_red, dataset_labels(clf_train), clf_train.class_count,
                         cfg.classifier);
    const Matrix test_sel = extract_selected(data.test, cascade, ranking, cfg.threads);
    const Matrix test_red = apply_reducer_matrix(reducer, test_sel);
    return matrix_accuracy(model, test_red, test_labels);
  };

  {
    std::vector<std::string> row = {std::to_string(data.train.class_count)};
    const SimilarityReport self = kernel_similarity(reference, reference);
    for (double s : self.per_stage) row.push_back(fmt_sim(s));
    row.push_back(fmt_pct(evaluate(reference)));
    table.rows.push_back(std::move(row));
  }

  for (int count : class_counts) {
    if (count >= data.train.class_count) continue;
    std::set<int> keep;
    for (int c = 0; c < count; ++c) keep.insert(c);
    const Dataset filtered = filter_classes(data.train, keep);
    const Dataset kernel_train =
        maybe_subset(filtered, cfg.kernel_train_size, cfg.seed);
    const SaakCascade cascade = fit_cascade(kernel_train, cfg.stages, pinned);
    std::vector<std::string> row = {std::to_string(count)};
    const SimilarityReport rep = kernel_similarity(cascade, reference);
    for (double s : rep.per_stage) row.push_back(fmt_sim(s));
    row.push_back(fmt_pct(evaluate(cascade)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

TableResult run_robustness(const ExperimentConfig& cfg) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const Dataset kernel_train = maybe_subset(data.train, cfg.kernel_train_size, cfg.seed);
  const Dataset clf_train =
      maybe_subset(data.train, cfg.classifier_train_size, cfg.seed + 1);
  const std::vector<int> test_labels = dataset_labels(data.test);

  const TrainedChain chain =
      train_chain(kernel_train, clf_train, base_policy(cfg), cfg.stages, cfg.anova_keep,
                  cfg.robustness_dim, cfg.classifier, cfg.threads);

  std::vector<Perturbation> conditions;
  for (int level = 1; level <= 4; ++level) {
    conditions.push_back(Perturbation::salt_pepper(level, cfg.noise_seed));
  }
  conditions.push_back(Perturbation::speckle(cfg.noise_seed, cfg.noise_sigma));
  conditions.push_back(Perturbation::gaussian(cfg.noise_seed, cfg.noise_sigma));
  conditions.push_back(Perturbation::random_bg(cfg.noise_seed));
  conditions.push_back(Perturbation::texture_bg(cfg.noise_seed));

  TableResult table;
  table.metadata = config_metadata(cfg);
  table.metadata.push_back("table=5");
  table.metadata.push_back("kernels=" + join_counts(chain.cascade.kept_counts()));
  table.header = {"condition", "accuracy"};

  auto eval_set = [&](const Dataset& test_set) {
    const Matrix sel = extract_selected(test_set, chain.cascade,
                                        chain.pipeline.ranking, cfg.threads);
    const Matrix red = apply_reducer_matrix(chain.pipeline.reducer, sel);
    return matrix_accuracy(chain.model, red, test_labels);
  };

  table.rows.push_back({"clean", fmt_pct(eval_set(data.test))});
  for (const Perturbation& pert : conditions) {
    table.rows.push_back({pert.name(), fmt_pct(eval_set(corrupt_dataset(data.test, pert)))});
  }
  return table;
}

}  // namespace saak
