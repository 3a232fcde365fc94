#include <cstdio>
#include <filesystem>
#include <fstream>

#include <stdexcept>

#include "doctest.h"
#include "saak/dataset.hpp"
#include "saak/harness.hpp"
#include "saak/synth.hpp"

using namespace saak;

namespace {

// One tiny corpus shared by every harness test in this binary.
const SynthFiles& micro_corpus() {
  static const SynthFiles files = [] {
    const std::string dir =
        (std::filesystem::temp_directory_path() / "saak_harness_micro").string();
    return write_synth_idx(dir, 400, 160, 6);
  }();
  return files;
}

ExperimentConfig micro_config() {
  const SynthFiles& files = micro_corpus();
  ExperimentConfig cfg;
  cfg.train_images = files.train_images;
  cfg.train_labels = files.train_labels;
  cfg.test_images = files.test_images;
  cfg.test_labels = files.test_labels;
  cfg.stages = 5;
  cfg.pad_side = 32;
  cfg.tau = 0.05;
  cfg.taus = {0.05, 0.1};
  cfg.reduced_dims = {8, 16};
  cfg.reduced_dim = 16;
  cfg.robustness_dim = 16;
  cfg.anova_keep = 0.2;  // keeps the micro PCA cheap
  cfg.kernel_train_size = 200;
  cfg.classifier_train_size = 300;
  cfg.subset_sizes = {100, 200};
  cfg.class_counts = {2, 4};
  cfg.classifier.epochs = 8;
  cfg.out_dir = (std::filesystem::temp_directory_path() / "saak_harness_out").string();
  return cfg;
}

double cell(const TableResult& t, std::size_t row, std::size_t col) {
  return std::stod(t.rows[row][col]);
}

}  // namespace

TEST_CASE("run_table1 grid shape, reproducibility and caching consistency") {
  const ExperimentConfig cfg = micro_config();
  const TableResult t = run_table1(cfg);
  REQUIRE(t.header.size() == 2 + cfg.reduced_dims.size());
  REQUIRE(t.rows.size() == cfg.taus.size());
  for (const auto& row : t.rows) {
    REQUIRE(row.size() == t.header.size());
    CHECK(row[1].front() == '(');
    for (std::size_t c = 2; c < row.size(); ++c) {
      const double acc = std::stod(row[c]);
      CHECK(acc >= 0.0);
      CHECK(acc <= 100.0);
    }
  }
  SUBCASE("metadata embeds the resolved config and version") {
    bool has_version = false, has_tau = false;
    for (const std::string& line : t.metadata) {
      if (line.rfind("version=", 0) == 0) has_version = true;
      if (line == "tau=0.05") has_tau = true;
    }
    CHECK(has_version);
    CHECK(has_tau);
  }
  SUBCASE("re-running the same config reproduces the bytes") {
    const TableResult again = run_table1(cfg);
    CHECK(t.csv() == again.csv());
  }
}

TEST_CASE("run_table1 with the oracle classifier stub is 100% everywhere") {
  ExperimentConfig cfg = micro_config();
  cfg.oracle_classifier = true;
  cfg.taus = {0.05};
  const TableResult t = run_table1(cfg);
  for (const auto& row : t.rows) {
    for (std::size_t c = 2; c < row.size(); ++c) CHECK(row[c] == "100.00");
  }
}

TEST_CASE("run_table1 lossless row at reduced scale") {
  ExperimentConfig cfg = micro_config();
  cfg.include_lossless = true;
  cfg.taus = {0.1};
  cfg.reduced_dims = {8};
  cfg.kernel_train_size = 40;
  cfg.classifier_train_size = 100;
  cfg.anova_keep = 0.05;
  const TableResult t = run_table1(cfg);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "all");
  // Lossless keeps the full channel law 8^p / 2.
  CHECK(t.rows[0][1] == "(4 32 256 2048 16384)");
  const double acc = cell(t, 0, 2);
  CHECK(acc >= 0.0);
  CHECK(acc <= 100.0);
}

TEST_CASE("run_similarity_vs_size has a perfect self row and sane values") {
  const ExperimentConfig cfg = micro_config();
  const TableResult t = run_similarity_vs_size(cfg);
  REQUIRE(t.rows.size() == 3);  // full + {200, 100}
  CHECK(t.rows[0][0] == "400");
  for (std::size_t c = 1; c < t.rows[0].size(); ++c) {
    CHECK(t.rows[0][c] == "1.0000");
  }
  for (std::size_t r = 1; r < t.rows.size(); ++r) {
    for (std::size_t c = 1; c < t.rows[r].size(); ++c) {
      const double s = std::stod(t.rows[r][c]);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("run_accuracy_vs_kernel_size sweeps sizes with the stated note") {
  const ExperimentConfig cfg = micro_config();
  const TableResult t = run_accuracy_vs_kernel_size(cfg);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "400");
  CHECK(t.rows[1][0] == "200");
  CHECK(t.rows[2][0] == "100");
  bool note = false;
  for (const std::string& line : t.metadata) {
    if (line.rfind("note=", 0) == 0 && line.find("5000") != std::string::npos) {
      note = true;
    }
  }
  CHECK(note);
}

TEST_CASE("run_class_scalability emits reference plus class-subset rows") {
  const ExperimentConfig cfg = micro_config();
  const TableResult t = run_class_scalability(cfg);
  REQUIRE(t.rows.size() == 3);  // 10-class reference, then 4, 2
  CHECK(t.rows[0][0] == "10");
  CHECK(t.rows[1][0] == "4");
  CHECK(t.rows[2][0] == "2");
  for (std::size_t c = 1; c + 1 < t.rows[0].size(); ++c) {
    CHECK(t.rows[0][c] == "1.0000");  // self-similarity of the reference
  }
  for (const auto& row : t.rows) {
    const double acc = std::stod(row.back());
    CHECK(acc >= 0.0);
    CHECK(acc <= 100.0);
  }
}

TEST_CASE("run_robustness covers all conditions; zero-effect noise equals clean") {
  ExperimentConfig cfg = micro_config();
  cfg.noise_sigma = 0.0;  // gaussian and speckle become identities
  const TableResult t = run_robustness(cfg);
  REQUIRE(t.rows.size() == 9);
  CHECK(t.rows[0][0] == "clean");
  CHECK(t.rows[1][0] == "sp1");
  CHECK(t.rows[4][0] == "sp4");
  CHECK(t.rows[5][0] == "speckle");
  CHECK(t.rows[6][0] == "gaussian");
  CHECK(t.rows[7][0] == "random_bg");
  CHECK(t.rows[8][0] == "texture_bg");
  CHECK(t.rows[5][1] == t.rows[0][1]);
  CHECK(t.rows[6][1] == t.rows[0][1]);
}

TEST_CASE("robustness clean entry equals the matching table-1 cell") {
  ExperimentConfig cfg = micro_config();
  cfg.taus = {cfg.tau};
  cfg.reduced_dims = {cfg.robustness_dim};
  const TableResult t1 = run_table1(cfg);
  const TableResult t5 = run_robustness(cfg);
  CHECK(t5.rows[0][1] == t1.rows[0][2]);
}

TEST_CASE("write_table emits the csv bytes") {
  const ExperimentConfig cfg = micro_config();
  TableResult t;
  t.metadata = {"k=v"};
  t.header = {"a", "b"};
  t.rows = {{"1", "2"}};
  const std::string path = cfg.out_dir + "/unit_table.csv";
  write_table(t, path);
  std::ifstream in(path);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  CHECK(contents == t.csv());
  CHECK(contents == "# k=v\na,b\n1,2\n");
}

TEST_CASE("worker partitioning does not change fitted selections") {
  const SynthFiles& files = micro_corpus();
  const Dataset train =
      pad_dataset(load_idx(files.train_images, files.train_labels), 32);
  const SaakCascade cascade = fit_cascade(train, 5, CascadePolicy::lossy_energy(0.05));
  const AnovaRanking serial = fit_anova_over(train, cascade, 0.3, 1);
  const AnovaRanking parallel = fit_anova_over(train, cascade, 0.3, 3);
  CHECK(serial.selected == parallel.selected);
  const Matrix a = extract_selected(train, cascade, serial, 1);
  const Matrix b = extract_selected(train, cascade, serial, 3);
  CHECK(a.data == b.data);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = micro_config();
  SUBCASE("pad/stages mismatch") {
    cfg.pad_side = 16;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("tau out of range") {
    cfg.tau = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("missing paths") {
    cfg.test_labels.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
  SUBCASE("anova fraction") {
    cfg.anova_keep = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}
