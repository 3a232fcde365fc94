#pragma once

#include <string>
#include <vector>

#include "saak/classifier.hpp"
#include "saak/features.hpp"
#include "saak/matrix.hpp"
#include "saak/transform.hpp"

namespace saak {

// Cascade model (.saak): magic "SAAK1", little-endian header {side, stages,
// mode, tau, per-stage kept counts}, then one basis block per stage
// (dim, kept, eigenvalues, mean, row-major eigenvector rows). A per-stage
// flags word reserves bit0 for a DC-split variant and sets bit1 when an
// implicit completion block follows.
void save_cascade(const SaakCascade& cascade, const std::string& path);
SaakCascade load_cascade(const std::string& path);

// Feature pipeline (.feat): magic "FEAT1"; layout descriptors, F-scores,
// selected indices, reduction basis and output dim.
void save_pipeline(const FeaturePipeline& pipeline, const std::string& path);
FeaturePipeline load_pipeline(const std::string& path);

// Classifier (.lsvm): magic "LSVM1"; class count, dim, standardization
// stats, weights, biases, training config.
void save_classifier(const LinearModel& model, const std::string& path);
LinearModel load_classifier(const std::string& path);
std::vector<std::uint8_t> classifier_bytes(const LinearModel& model);

// Extracted-feature cache (.fvec): magic "FVEC1"; rows, cols, labels, data.
void save_features(const Matrix& features, std::span<const int> labels,
                   const std::string& path);
std::pair<Matrix, std::vector<int>> load_features(const std::string& path);

}  // namespace saak
