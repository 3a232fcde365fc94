#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "saak/classifier.hpp"
#include "saak/dataset.hpp"
#include "saak/eval.hpp"
#include "saak/features.hpp"
#include "saak/perturb.hpp"
#include "saak/transform.hpp"

namespace saak {

// Resolved experiment parameters. Validated before any compute; the full
// key=value form is embedded in every emitted table so a run can be
// reproduced byte-for-byte from its own output.
struct ExperimentConfig {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::string out_dir = ".";

  int stages = 5;
  int pad_side = 32;
  double tau = 0.03;
  std::vector<std::size_t> keep_counts;  // optional injected kernel counts
  double anova_keep = 0.75;
  std::size_t reduced_dim = 64;
  std::vector<std::size_t> reduced_dims = {32, 64, 128, 256};
  std::vector<double> taus = {0.01, 0.03, 0.05, 0.07};
  bool include_lossless = false;

  std::size_t kernel_train_size = 10000;   // 0 = all
  std::size_t classifier_train_size = 0;   // 0 = all
  std::vector<std::size_t> subset_sizes = {10000, 20000, 30000, 40000, 50000};
  std::vector<int> class_counts = {2, 4, 6, 8};

  ClassifierConfig classifier;
  bool oracle_classifier = false;  // plumbing checks: predict the true label
  std::size_t robustness_dim = 32;
  double noise_sigma = 0.2;
  std::uint64_t seed = 7;
  std::uint64_t noise_seed = 99;
  unsigned threads = 1;

  void validate() const;
  std::map<std::string, std::string> resolved() const;
};

struct TableResult {
  std::vector<std::string> metadata;  // "key=value", sorted; version included
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const;
  std::string pretty() const;
};

void write_table(const TableResult& table, const std::string& path);

// End-to-end fitted chain: cascade -> ANOVA -> PCA -> classifier.
struct TrainedChain {
  SaakCascade cascade;
  FeaturePipeline pipeline;
  LinearModel model;
};

TrainedChain train_chain(const Dataset& kernel_train, const Dataset& clf_train,
                         const CascadePolicy& policy, int stages, double anova_keep,
                         std::size_t reduced_dim, const ClassifierConfig& cc,
                         unsigned threads = 1);

// Streaming feature extraction over a dataset.
AnovaRanking fit_anova_over(const Dataset& data, const SaakCascade& cascade,
                            double keep_fraction, unsigned threads = 1);
Matrix extract_selected(const Dataset& data, const SaakCascade& cascade,
                        const AnovaRanking& ranking, unsigned threads = 1);
std::vector<int> dataset_labels(const Dataset& data);

// Kernel-policy grid (lossless behind include_lossless, then the tau rows)
// against the reduced-dimension sweep.
TableResult run_table1(const ExperimentConfig& config);

// Kernel cosine similarity of subset-trained cascades against the full-set
// cascade, one row per training-set size.
TableResult run_similarity_vs_size(const ExperimentConfig& config);

// Accuracy with kernels from each training-set size; feature pipeline and
// classifier always train on the full set.
TableResult run_accuracy_vs_kernel_size(const ExperimentConfig& config);

// Kernels from class subsets: per-stage similarity against the all-class
// cascade plus ten-class accuracy with those kernels.
TableResult run_class_scalability(const ExperimentConfig& config);

// Clean-trained chain evaluated on the eight corrupted test sets plus the
// clean baseline.
TableResult run_robustness(const ExperimentConfig& config);

}  // namespace saak
