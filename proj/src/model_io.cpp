#include "saak/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "saak/errors.hpp"

namespace saak {
namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(const char* m) { out_.write(m, 5); }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out_.write(b, 4);
  }
  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out_.write(b, 8);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  void magic(const char* expect) {
    char m[5];
    if (!in_.read(m, 5) || std::memcmp(m, expect, 5) != 0) {
      throw FormatError("bad magic in " + path_ + " (want " + expect + ")");
    }
  }
  std::uint8_t u8() {
    int c = in_.get();
    if (c == EOF) fail();
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    unsigned char b[4];
    if (!in_.read(reinterpret_cast<char*>(b), 4)) fail();
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    if (!in_.read(reinterpret_cast<char*>(b), 8)) fail();
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void f64s(std::span<double> vs) {
    for (double& v : vs) v = f64();
  }

 private:
  [[noreturn]] void fail() { throw IoError("truncated file " + path_); }
  std::istream& in_;
  std::string path_;
};

void write_basis(Writer& w, const EigenBasis& b) {
  w.u64(b.dim);
  w.u64(b.kept());
  w.f64s(b.eigenvalues);
  w.f64s(b.mean);
  w.f64s(b.rows);
}

EigenBasis read_basis(Reader& r) {
  EigenBasis b;
  b.dim = r.u64();
  const std::uint64_t kept = r.u64();
  if (b.dim == 0 || b.dim > (1u << 20) || kept > b.dim) {
    throw FormatError("implausible basis dimensions (" + std::to_string(b.dim) +
                      ", " + std::to_string(kept) + ")");
  }
  b.eigenvalues.resize(kept);
  r.f64s(b.eigenvalues);
  b.mean.resize(b.dim);
  r.f64s(b.mean);
  b.rows.resize(kept * b.dim);
  r.f64s(b.rows);
  return b;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

constexpr std::uint32_t kFlagDcSplit = 1u;      // reserved
constexpr std::uint32_t kFlagCompletion = 2u;

}  // namespace

void save_cascade(const SaakCascade& cascade, const std::string& path) {
  std::ofstream out = open_out(path);
  Writer w(out);
  w.magic("SAAK1");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(cascade.input_side));
  w.u32(static_cast<std::uint32_t>(cascade.stage_count()));
  std::uint8_t mode = 0;
  if (cascade.policy.mode == CascadeMode::Lossy) {
    mode = cascade.policy.keep_counts.empty() ? 1 : 2;
  }
  w.u8(mode);
  w.f64(cascade.policy.tau);
  for (std::size_t k : cascade.kept_counts()) w.u64(k);
  for (const StageKernels& s : cascade.stages) {
    w.u32(static_cast<std::uint32_t>(s.stage));
    w.u64(s.input_depth);
    w.u32(s.completion ? kFlagCompletion : 0u);
    write_basis(w, s.basis);
    if (s.completion) {
      const NullCompletion& c = *s.completion;
      w.u64(c.rank);
      w.f64s(c.reflectors);
      w.f64s(c.betas);
      w.f64s(c.signs);
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

SaakCascade load_cascade(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r(in, path);
  r.magic("SAAK1");
  const std::uint32_t version = r.u32();
  if (version != 1) throw FormatError("unsupported cascade version in " + path);
  SaakCascade cascade;
  cascade.input_side = static_cast<int>(r.u32());
  const std::uint32_t stages = r.u32();
  const std::uint8_t mode = r.u8();
  const double tau = r.f64();
  std::vector<std::size_t> counts(stages);
  for (auto& c : counts) c = r.u64();
  switch (mode) {
    case 0:
      cascade.policy = CascadePolicy::lossless();
      break;
    case 1:
      cascade.policy = CascadePolicy::lossy_energy(tau);
      break;
    case 2:
      cascade.policy = CascadePolicy::lossy_counts(counts);
      break;
    default:
      throw FormatError("unknown cascade mode in " + path);
  }
  for (std::uint32_t p = 0; p < stages; ++p) {
    StageKernels s;
    s.stage = static_cast<int>(r.u32());
    s.input_depth = r.u64();
    const std::uint32_t flags = r.u32();
    if (flags & kFlagDcSplit) {
      throw FormatError("dc-split cascades not supported in " + path);
    }
    s.basis = read_basis(r);
    if (flags & kFlagCompletion) {
      NullCompletion c;
      c.dim = s.basis.dim;
      c.rank = r.u64();
      c.reflectors.resize(c.rank * c.dim);
      r.f64s(c.reflectors);
      c.betas.resize(c.rank);
      r.f64s(c.betas);
      c.signs.resize(c.rank);
      r.f64s(c.signs);
      s.completion = std::move(c);
    }
    if (s.signed_depth() != counts[p]) {
      throw ConsistencyError("stage depth disagrees with header in " + path);
    }
    cascade.stages.push_back(std::move(s));
  }
  return cascade;
}

void save_pipeline(const FeaturePipeline& pipeline, const std::string& path) {
  std::ofstream out = open_out(path);
  Writer w(out);
  w.magic("FEAT1");
  w.u32(1);
  w.u64(pipeline.layout.entries.size());
  for (const FeatureEntry& e : pipeline.layout.entries) {
    w.u32(e.stage);
    w.u32(e.channel);
    w.u32(e.row);
    w.u32(e.col);
  }
  w.u64(pipeline.ranking.f_scores.size());
  w.f64s(pipeline.ranking.f_scores);
  w.u64(pipeline.ranking.selected.size());
  for (std::uint32_t idx : pipeline.ranking.selected) w.u32(idx);
  w.u64(pipeline.reducer.output_dim);
  write_basis(w, pipeline.reducer.basis);
  if (!out) throw IoError("write failed for " + path);
}

FeaturePipeline load_pipeline(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r(in, path);
  r.magic("FEAT1");
  if (r.u32() != 1) throw FormatError("unsupported pipeline version in " + path);
  FeaturePipeline p;
  const std::uint64_t entries = r.u64();
  p.layout.entries.resize(entries);
  for (FeatureEntry& e : p.layout.entries) {
    e.stage = r.u32();
    e.channel = r.u32();
    e.row = r.u32();
    e.col = r.u32();
  }
  p.ranking.f_scores.resize(r.u64());
  r.f64s(p.ranking.f_scores);
  p.ranking.selected.resize(r.u64());
  for (std::uint32_t& idx : p.ranking.selected) idx = r.u32();
  p.reducer.output_dim = r.u64();
  p.reducer.basis = read_basis(r);
  return p;
}

void save_classifier(const LinearModel& model, const std::string& path) {
  const std::vector<std::uint8_t> bytes = classifier_bytes(model);
  std::ofstream out = open_out(path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

std::vector<std::uint8_t> classifier_bytes(const LinearModel& model) {
  std::ostringstream buf(std::ios::binary);
  Writer w(buf);
  w.magic("LSVM1");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(model.class_count));
  w.u64(model.dim);
  w.f64s(model.feat_mean);
  w.f64s(model.feat_scale);
  w.f64s(model.weights);
  w.f64s(model.biases);
  w.f64(model.config.lambda);
  w.u32(static_cast<std::uint32_t>(model.config.epochs));
  w.u64(model.config.seed);
  const std::string s = buf.str();
  return {s.begin(), s.end()};
}

LinearModel load_classifier(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r(in, path);
  r.magic("LSVM1");
  if (r.u32() != 1) throw FormatError("unsupported classifier version in " + path);
  LinearModel m;
  m.class_count = static_cast<int>(r.u32());
  m.dim = r.u64();
  m.feat_mean.resize(m.dim);
  r.f64s(m.feat_mean);
  m.feat_scale.resize(m.dim);
  r.f64s(m.feat_scale);
  m.weights.resize(static_cast<std::size_t>(m.class_count) * m.dim);
  r.f64s(m.weights);
  m.biases.resize(m.class_count);
  r.f64s(m.biases);
  m.config.lambda = r.f64();
  m.config.epochs = static_cast<int>(r.u32());
  m.config.seed = r.u64();
  return m;
}

void save_features(const Matrix& features, std::span<const int> labels,
                   const std::string& path) {
  if (labels.size() != features.rows) {
    throw ConsistencyError("feature/label count mismatch for " + path);
  }
  std::ofstream out = open_out(path);
  Writer w(out);
  w.magic("FVEC1");
  w.u32(1);
  w.u64(features.rows);
  w.u64(features.cols);
  for (int l : labels) w.u32(static_cast<std::uint32_t>(l));
  w.f64s(features.data);
  if (!out) throw IoError("write failed for " + path);
}

std::pair<Matrix, std::vector<int>> load_features(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r(in, path);
  r.magic("FVEC1");
  if (r.u32() != 1) throw FormatError("unsupported feature-cache version in " + path);
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  std::vector<int> labels(rows);
  for (int& l : labels) l = static_cast<int>(r.u32());
  Matrix m(rows, cols);
  r.f64s(m.data);
  return {std::move(m), std::move(labels)};
}

}  // namespace saak
