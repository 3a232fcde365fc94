#include <cstdio>
#include <exception>
#include <iostream>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "saak/dataset.hpp"
#include "saak/errors.hpp"
#include "saak/eval.hpp"
#include "saak/harness.hpp"
#include "saak/idx.hpp"
#include "saak/model_io.hpp"
#include "saak/perturb.hpp"
#include "saak/synth.hpp"
#include "saak/version.hpp"

namespace {

using namespace saak;

Dataset load_pair(const std::string& images, const std::string& labels, int pad_side,
                  std::size_t subset_size, std::uint64_t seed,
                  const std::vector<int>& classes) {
  Dataset ds = load_idx(images, labels);
  if (!classes.empty()) {
    ds = filter_classes(ds, std::set<int>(classes.begin(), classes.end()));
  }
  if (subset_size > 0 && subset_size < ds.size()) {
    ds = subset(ds, subset_size, seed);
  }
  if (pad_side > 0) ds = pad_dataset(ds, pad_side);
  return ds;
}

Perturbation make_perturbation(const std::string& kind, int level, std::uint64_t seed,
                               double sigma, double threshold) {
  if (kind == "sp") return Perturbation::salt_pepper(level, seed);
  if (kind == "speckle") return Perturbation::speckle(seed, sigma);
  if (kind == "gaussian") return Perturbation::gaussian(seed, sigma);
  if (kind == "random_bg") return Perturbation::random_bg(seed, threshold);
  if (kind == "texture_bg") return Perturbation::texture_bg(seed, threshold);
  throw CLI::ValidationError("--kind", "unknown noise kind " + kind);
}

// Flat key=value config support for `reproduce`: each line becomes
// --key=value unless the same flag was given explicitly, so command-line
// values always win. Lines starting with # and blank lines are skipped.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (config_path.empty()) return out;

  std::set<std::string> given;
  for (const std::string& a : out) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
  }
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config " + config_path);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos || line[begin] == '#') continue;
    const std::size_t eq = line.find('=', begin);
    if (eq == std::string::npos) {
      throw FormatError("config line without '=': " + line);
    }
    std::string key = line.substr(begin, eq - begin);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(eq + 1);
    const std::size_t vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    while (!value.empty() && (value.back() == ' ' || value.back() == '\t' ||
                              value.back() == '\r')) {
      value.pop_back();
    }
    if (given.count("--" + key)) continue;
    injected.push_back("--" + key + "=" + value);
  }
  // Config tokens go right after the subcommand name.
  std::vector<std::string> merged;
  bool inserted = false;
  for (const std::string& a : out) {
    merged.push_back(a);
    if (!inserted && a == "reproduce") {
      merged.insert(merged.end(), injected.begin(), injected.end());
      inserted = true;
    }
  }
  return merged;
}

void write_dataset_idx(const Dataset& ds, const std::string& base) {
  const int side = ds.images.empty() ? 0 : ds.images.front().side;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;
  pixels.reserve(ds.size() * side * side);
  for (const Image& img : ds.images) {
    for (double v : img.pixels) {
      const double c = std::min(std::max(v, 0.0), 1.0);
      pixels.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
    }
    labels.push_back(static_cast<std::uint8_t>(img.label));
  }
  write_idx_images(base + "-images-idx3-ubyte", ds.size(), side, side, pixels);
  write_idx_labels(base + "-labels-idx1-ubyte", labels);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-stage Saak transform feature extraction and evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ExperimentConfig cfg;

  // gen-digits
  std::string gen_dir = "data";
  std::size_t gen_train = 60000, gen_test = 10000;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-digits",
                                 "Write a deterministic procedural digit corpus as IDX");
  gen->add_option("--out-dir", gen_dir, "Output directory");
  gen->add_option("--train", gen_train, "Training image count");
  gen->add_option("--test", gen_test, "Test image count");
  gen->add_option("--seed", gen_seed, "Corpus seed");

  // train-kernels
  std::string tk_images, tk_labels, tk_out = "model.saak";
  std::size_t tk_subset = 0;
  std::uint64_t tk_seed = 7;
  int tk_stages = 5, tk_pad = 32;
  double tk_tau = 0.03;
  std::vector<std::size_t> tk_keep;
  std::vector<int> tk_classes;
  bool tk_lossless = false;
  auto* tk = app.add_subcommand("train-kernels", "Fit a Saak cascade and save it");
  tk->add_option("--train-images", tk_images, "IDX image file")->required();
  tk->add_option("--train-labels", tk_labels, "IDX label file")->required();
  tk->add_option("--subset-size", tk_subset, "Kernel training subset size (0 = all)");
  tk->add_option("--seed", tk_seed, "Subset seed");
  tk->add_option("--classes", tk_classes, "Class filter")->delimiter(',');
  tk->add_option("--stages", tk_stages, "Cascade stages");
  tk->add_option("--pad-to", tk_pad, "Padded side (2^stages)");
  tk->add_option("--tau", tk_tau, "Energy threshold for the lossy fit");
  tk->add_option("--keep", tk_keep, "Injected per-stage kernel counts")->delimiter(',');
  tk->add_flag("--lossless", tk_lossless, "Fit the lossless cascade");
  tk->add_option("--out", tk_out, "Output model path");

  // extract
  std::string ex_model, ex_images, ex_labels, ex_out = "features.fvec";
  auto* ex = app.add_subcommand("extract", "Flattened signed Saak coefficients to .fvec");
  ex->add_option("--model", ex_model, "Cascade model")->required();
  ex->add_option("--images", ex_images, "IDX image file")->required();
  ex->add_option("--labels", ex_labels, "IDX label file")->required();
  ex->add_option("--out", ex_out, "Output feature cache");

  // train-clf
  std::string tc_model, tc_images, tc_labels;
  std::string tc_out_pipeline = "pipeline.feat", tc_out_model = "clf.lsvm";
  double tc_rho = 0.75;
  std::size_t tc_dim = 64;
  ClassifierConfig tc_cc;
  auto* tc = app.add_subcommand("train-clf",
                                "Fit ANOVA selection, PCA reduction and the classifier");
  tc->add_option("--model", tc_model, "Cascade model")->required();
  tc->add_option("--train-images", tc_images, "IDX image file")->required();
  tc->add_option("--train-labels", tc_labels, "IDX label file")->required();
  tc->add_option("--rho", tc_rho, "ANOVA keep fraction");
  tc->add_option("--dim", tc_dim, "Reduced feature dimension");
  tc->add_option("--lambda", tc_cc.lambda, "L2 regularization");
  tc->add_option("--epochs", tc_cc.epochs, "Training epochs");
  tc->add_option("--seed", tc_cc.seed, "Shuffle seed");
  tc->add_option("--out-pipeline", tc_out_pipeline, "Feature pipeline output");
  tc->add_option("--out-model", tc_out_model, "Classifier output");

  // eval
  std::string ev_model, ev_pipeline, ev_clf, ev_images, ev_labels, ev_noise;
  int ev_level = 1;
  std::uint64_t ev_noise_seed = 99;
  double ev_sigma = 0.2, ev_threshold = 0.1;
  auto* ev = app.add_subcommand("eval", "Classification accuracy on a test set");
  ev->add_option("--model", ev_model, "Cascade model")->required();
  ev->add_option("--pipeline", ev_pipeline, "Feature pipeline")->required();
  ev->add_option("--clf", ev_clf, "Classifier")->required();
  ev->add_option("--test-images", ev_images, "IDX image file")->required();
  ev->add_option("--test-labels", ev_labels, "IDX label file")->required();
  ev->add_option("--noise", ev_noise, "Optional corruption kind");
  ev->add_option("--level", ev_level, "Salt & pepper level");
  ev->add_option("--noise-seed", ev_noise_seed, "Corruption seed");
  ev->add_option("--sigma", ev_sigma, "Gaussian/speckle sigma");
  ev->add_option("--threshold", ev_threshold, "Background threshold");

  // similarity
  std::string sm_a, sm_b;
  bool sm_greedy = false;
  auto* sm = app.add_subcommand("similarity", "Per-stage kernel cosine similarity");
  sm->add_option("--model-a", sm_a, "First cascade")->required();
  sm->add_option("--model-b", sm_b, "Second cascade")->required();
  sm->add_flag("--greedy", sm_greedy, "Greedy best-match pairing");

  // recon
  std::string rc_model, rc_images, rc_labels;
  std::size_t rc_count = 100;
  auto* rc = app.add_subcommand("recon", "Round-trip reconstruction error");
  rc->add_option("--model", rc_model, "Cascade model")->required();
  rc->add_option("--images", rc_images, "IDX image file")->required();
  rc->add_option("--labels", rc_labels, "IDX label file")->required();
  rc->add_option("--count", rc_count, "Images to evaluate");

  // perturb
  std::string pb_images, pb_labels, pb_kind = "sp", pb_out = "noisy";
  int pb_level = 1;
  std::uint64_t pb_seed = 7;
  double pb_sigma = 0.2, pb_threshold = 0.1;
  auto* pb = app.add_subcommand("perturb", "Corrupt a dataset and write IDX");
  pb->add_option("--images", pb_images, "IDX image file")->required();
  pb->add_option("--labels", pb_labels, "IDX label file")->required();
  pb->add_option("--kind", pb_kind, "sp|speckle|gaussian|random_bg|texture_bg");
  pb->add_option("--level", pb_level, "Salt & pepper level 1..4");
  pb->add_option("--seed", pb_seed, "Corruption seed");
  pb->add_option("--sigma", pb_sigma, "Gaussian/speckle sigma");
  pb->add_option("--threshold", pb_threshold, "Background threshold");
  pb->add_option("--out", pb_out, "Output base path (writes <out>-images/-labels)");

  // reproduce
  int rp_table = 1;
  auto* rp = app.add_subcommand("reproduce", "Run a scripted experiment table");
  std::string rp_config;
  rp->add_option("--config", rp_config,
                 "Flat key=value file; explicit flags override its entries");
  rp->add_option("--table", rp_table, "Table number 1..5")->required();
  rp->add_option("--train-images", cfg.train_images, "IDX image file");
  rp->add_option("--train-labels", cfg.train_labels, "IDX label file");
  rp->add_option("--test-images", cfg.test_images, "IDX image file");
  rp->add_option("--test-labels", cfg.test_labels, "IDX label file");
  rp->add_option("--out-dir", cfg.out_dir, "Output directory");
  rp->add_option("--stages", cfg.stages, "Cascade stages");
  rp->add_option("--pad-to", cfg.pad_side, "Padded side");
  rp->add_option("--tau", cfg.tau, "Energy threshold");
  rp->add_option("--keep", cfg.keep_counts, "Injected kernel counts")->delimiter(',');
  rp->add_option("--rho", cfg.anova_keep, "ANOVA keep fraction");
  rp->add_option("--dim", cfg.reduced_dim, "Reduced dimension (tables 3/4)");
  rp->add_option("--dims", cfg.reduced_dims, "Reduced dimension grid (table 1)")
      ->delimiter(',');
  rp->add_option("--taus", cfg.taus, "Energy threshold grid (table 1)")->delimiter(',');
  rp->add_flag("--include-lossless", cfg.include_lossless,
               "Add the lossless row to table 1 (expensive)");
  rp->add_option("--kernel-train-size", cfg.kernel_train_size,
                 "Kernel training subset size (0 = all)");
  rp->add_option("--classifier-train-size", cfg.classifier_train_size,
                 "Classifier training subset size (0 = all)");
  rp->add_option("--subset-sizes", cfg.subset_sizes, "Size sweep (tables 2/3)")
      ->delimiter(',');
  rp->add_option("--class-counts", cfg.class_counts, "Class sweep (table 4)")
      ->delimiter(',');
  rp->add_option("--lambda", cfg.classifier.lambda, "Classifier L2");
  rp->add_option("--epochs", cfg.classifier.epochs, "Classifier epochs");
  rp->add_option("--clf-seed", cfg.classifier.seed, "Classifier seed");
  rp->add_flag("--oracle-classifier", cfg.oracle_classifier,
               "Replace the classifier with a true-label stub (plumbing checks)");
  rp->add_option("--robustness-dim", cfg.robustness_dim, "Reduced dim for table 5");
  rp->add_option("--noise-sigma", cfg.noise_sigma, "Noise sigma for table 5");
  rp->add_option("--seed", cfg.seed, "Subset seed");
  rp->add_option("--noise-seed", cfg.noise_seed, "Corruption seed");
  rp->add_option("--threads", cfg.threads, "Worker threads");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config_args(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::vector<const char*> eargv;
  eargv.reserve(expanded.size());
  for (const std::string& a : expanded) eargv.push_back(a.c_str());
  CLI11_PARSE(app, static_cast<int>(eargv.size()), eargv.data());

  try {
    if (*gen) {
      const SynthFiles files = write_synth_idx(gen_dir, gen_train, gen_test, gen_seed);
      std::cout << "wrote " << files.train_images << " (+labels), " << files.test_images
                << " (+labels)\n";
    } else if (*tk) {
      const Dataset train =
          load_pair(tk_images, tk_labels, tk_pad, tk_subset, tk_seed, tk_classes);
      CascadePolicy policy = CascadePolicy::lossy_energy(tk_tau);
      if (tk_lossless) {
        policy = CascadePolicy::lossless();
      } else if (!tk_keep.empty()) {
        policy = CascadePolicy::lossy_counts(tk_keep);
      }
      const SaakCascade cascade = fit_cascade(train, tk_stages, policy);
      save_cascade(cascade, tk_out);
      std::cout << "kernels per stage:";
      for (std::size_t k : cascade.kept_counts()) std::cout << " " << k;
      std::cout << "\nwrote " << tk_out << "\n";
    } else if (*ex) {
      const SaakCascade cascade = load_cascade(ex_model);
      const Dataset data =
          load_pair(ex_images, ex_labels, cascade.input_side, 0, 0, {});
      const FeatureLayout layout = FeatureLayout::from(cascade);
      Matrix features(data.size(), layout.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        const std::vector<double> flat =
            flatten(forward_cascade(data.images[i], cascade));
        std::copy(flat.begin(), flat.end(), features.row(i).begin());
      }
      save_features(features, dataset_labels(data), ex_out);
      std::cout << "wrote " << features.rows << "x" << features.cols << " to " << ex_out
                << "\n";
    } else if (*tc) {
      const SaakCascade cascade = load_cascade(tc_model);
      const Dataset train =
          load_pair(tc_images, tc_labels, cascade.input_side, 0, 0, {});
      FeaturePipeline pipeline;
      pipeline.layout = FeatureLayout::from(cascade);
      pipeline.ranking = fit_anova_over(train, cascade, tc_rho);
      const Matrix selected = extract_selected(train, cascade, pipeline.ranking);
      pipeline.reducer = fit_reducer(selected, tc_dim);
      const Matrix reduced = apply_reducer_matrix(pipeline.reducer, selected);
      const LinearModel model =
          train_classifier(reduced, dataset_labels(train), train.class_count, tc_cc);
      save_pipeline(pipeline, tc_out_pipeline);
      save_classifier(model, tc_out_model);
      std::cout << "selected " << pipeline.ranking.selected.size() << " of "
                << pipeline.layout.size() << " features, reduced to " << tc_dim
                << "\nwrote " << tc_out_pipeline << ", " << tc_out_model << "\n";
    } else if (*ev) {
      const SaakCascade cascade = load_cascade(ev_model);
      const FeaturePipeline pipeline = load_pipeline(ev_pipeline);
      const LinearModel model = load_classifier(ev_clf);
      Dataset test = load_pair(ev_images, ev_labels, cascade.input_side, 0, 0, {});
      if (!ev_noise.empty()) {
        test = corrupt_dataset(test, make_perturbation(ev_noise, ev_level,
                                                       ev_noise_seed, ev_sigma,
                                                       ev_threshold));
      }
      const double acc = accuracy(cascade, pipeline, model, test);
      std::printf("accuracy %.4f (%zu images)\n", acc, test.size());
    } else if (*sm) {
      const SaakCascade a = load_cascade(sm_a);
      const SaakCascade b = load_cascade(sm_b);
      const SimilarityReport rep = kernel_similarity(a, b, sm_greedy);
      for (std::size_t p = 0; p < rep.per_stage.size(); ++p) {
        std::printf("stage %zu: %.4f (%zu kernels)\n", p + 1, rep.per_stage[p],
                    rep.compared[p]);
      }
    } else if (*rc) {
      const SaakCascade cascade = load_cascade(rc_model);
      Dataset data = load_pair(rc_images, rc_labels, cascade.input_side, 0, 0, {});
      double max_abs = 0.0, rmse_sum = 0.0;
      const std::size_t n = std::min(rc_count, data.size());
      for (std::size_t i = 0; i < n; ++i) {
        const ReconError e = reconstruction_error(data.images[i], cascade);
        max_abs = std::max(max_abs, e.max_abs);
        rmse_sum += e.rmse;
      }
      std::printf("max_abs %.3e  mean_rmse %.3e  (%zu images)\n", max_abs,
                  rmse_sum / static_cast<double>(n), n);
    } else if (*pb) {
      const Dataset data = load_pair(pb_images, pb_labels, 0, 0, 0, {});
      const Dataset noisy = corrupt_dataset(
          data, make_perturbation(pb_kind, pb_level, pb_seed, pb_sigma, pb_threshold));
      write_dataset_idx(noisy, pb_out);
      std::cout << "wrote " << pb_out << "-images-idx3-ubyte and labels\n";
    } else if (*rp) {
      TableResult table;
      switch (rp_table) {
        case 1:
          table = run_table1(cfg);
          break;
        case 2:
          table = run_similarity_vs_size(cfg);
          break;
        case 3:
          table = run_accuracy_vs_kernel_size(cfg);
          break;
        case 4:
          table = run_class_scalability(cfg);
          break;
        case 5:
          table = run_robustness(cfg);
          break;
        default:
          throw CLI::ValidationError("--table", "table must be 1..5");
      }
      const std::string path =
          cfg.out_dir + "/table" + std::to_string(rp_table) + ".csv";
      write_table(table, path);
      std::cout << table.pretty() << "wrote " << path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
