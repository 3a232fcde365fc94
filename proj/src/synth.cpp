#include "saak/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "saak/idx.hpp"
#include "saak/rng.hpp"

namespace saak {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Pt {
  double x, y;
};

// Canonical skeletons on a [0,1]^2 box, y pointing down. Arcs are sampled
// into polylines; strokes are lists of points connected by segments.
using Stroke = std::vector<Pt>;

void arc(Stroke& s, double cx, double cy, double rx, double ry, double a0_deg,
         double a1_deg, int steps = 24) {
  for (int i = 0; i <= steps; ++i) {
    const double a = (a0_deg + (a1_deg - a0_deg) * i / steps) * kTwoPi / 360.0;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
}

std::vector<Stroke> digit_skeleton(int digit) {
  std::vector<Stroke> strokes;
  auto line = [&](Pt a, Pt b) { strokes.push_back({a, b}); };
  switch (digit) {
    case 0: {
      Stroke s;
      arc(s, 0.5, 0.5, 0.21, 0.35, 0, 360, 40);
      strokes.push_back(std::move(s));
      break;
    }
    case 1:
      line({0.5, 0.12}, {0.5, 0.88});
      line({0.38, 0.3}, {0.5, 0.12});
      break;
    case 2: {
      Stroke s;
      arc(s, 0.5, 0.32, 0.19, 0.19, 170, 350);
      strokes.push_back(std::move(s));
      line({0.68, 0.36}, {0.32, 0.85});
      line({0.32, 0.85}, {0.71, 0.85});
      break;
    }
    case 3: {
      Stroke a1;
      arc(a1, 0.47, 0.3, 0.2, 0.18, 215, 90);
      strokes.push_back(std::move(a1));
      Stroke a2;
      arc(a2, 0.47, 0.66, 0.22, 0.21, 270, 140);
      strokes.push_back(std::move(a2));
      break;
    }
    case 4:
      line({0.58, 0.12}, {0.28, 0.58});
      line({0.28, 0.58}, {0.75, 0.58});
      line({0.62, 0.34}, {0.62, 0.88});
      break;
    case 5: {
      line({0.68, 0.14}, {0.36, 0.14});
      line({0.36, 0.14}, {0.33, 0.46});
      Stroke s;
      arc(s, 0.47, 0.64, 0.22, 0.22, 255, 480);
      strokes.push_back(std::move(s));
      break;
    }
    case 6: {
      strokes.push_back({{0.63, 0.12}, {0.48, 0.32}, {0.38, 0.5}, {0.34, 0.64}});
      Stroke s;
      arc(s, 0.5, 0.67, 0.17, 0.19, 0, 360, 32);
      strokes.push_back(std::move(s));
      break;
    }
    case 7:
      line({0.3, 0.15}, {0.72, 0.15});
      line({0.72, 0.15}, {0.42, 0.88});
      break;
    case 8: {
      Stroke a1;
      arc(a1, 0.5, 0.31, 0.17, 0.17, 0, 360, 32);
      strokes.push_back(std::move(a1));
      Stroke a2;
      arc(a2, 0.5, 0.66, 0.2, 0.21, 0, 360, 32);
      strokes.push_back(std::move(a2));
      break;
    }
    case 9: {
      Stroke s;
      arc(s, 0.5, 0.33, 0.18, 0.19, 0, 360, 32);
      strokes.push_back(std::move(s));
      strokes.push_back({{0.68, 0.36}, {0.66, 0.6}, {0.59, 0.88}});
      break;
    }
    default:
      break;
  }
  return strokes;
}

double seg_dist2(Pt p, Pt a, Pt b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double wx = p.x - a.x;
  const double wy = p.y - a.y;
  const double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = wx - t * vx;
  const double dy = wy - t * vy;
  return dx * dx + dy * dy;
}

}  // namespace

Image synth_digit(int digit, std::uint64_t seed, std::uint64_t index, int side) {
  Rng rng = Rng::substream(seed, index);

  // Per-sample deformation parameters.
  const double rot = rng.uniform(-0.22, 0.22);
  const double sx = rng.uniform(0.82, 1.12);
  const double sy = rng.uniform(0.82, 1.12);
  const double shear = rng.uniform(-0.25, 0.25);
  const double tx = rng.uniform(-0.07, 0.07);
  const double ty = rng.uniform(-0.06, 0.06);
  const double half_thick = rng.uniform(0.035, 0.06);
  const double soft = rng.uniform(0.018, 0.03);
  const double gain = rng.uniform(0.82, 1.0);
  // Elastic warp: low-frequency sinusoidal displacement of the sampling grid.
  const double wamp_x = rng.uniform(0.0, 0.035);
  const double wamp_y = rng.uniform(0.0, 0.035);
  const double wfreq_x = rng.uniform(0.6, 1.6);
  const double wfreq_y = rng.uniform(0.6, 1.6);
  const double wph_x = rng.uniform(0.0, kTwoPi);
  const double wph_y = rng.uniform(0.0, kTwoPi);

  const double ca = std::cos(rot);
  const double sa = std::sin(rot);
  std::vector<Stroke> strokes = digit_skeleton(digit);
  for (Stroke& s : strokes) {
    for (Pt& p : s) {
      double x = (p.x - 0.5) * sx;
      double y = (p.y - 0.5) * sy;
      x += shear * y;
      const double xr = ca * x - sa * y;
      const double yr = sa * x + ca * y;
      p.x = xr + 0.5 + tx;
      p.y = yr + 0.5 + ty;
    }
  }

  Image img;
  img.side = side;
  img.label = digit;
  img.pixels.assign(static_cast<std::size_t>(side) * side, 0.0);
  const double inv = 1.0 / side;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      double px = (c + 0.5) * inv;
      double py = (r + 0.5) * inv;
      px += wamp_x * std::sin(kTwoPi * wfreq_x * py + wph_x);
      py += wamp_y * std::sin(kTwoPi * wfreq_y * px + wph_y);
      double d2 = 1e9;
      for (const Stroke& s : strokes) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
          d2 = std::min(d2, seg_dist2({px, py}, s[i], s[i + 1]));
        }
      }
      const double d = std::sqrt(d2);
      const double v = std::clamp((half_thick + soft - d) / soft, 0.0, 1.0);
      img.at(r, c) = gain * v;
    }
  }
  return img;
}

Dataset synth_dataset(std::size_t count, std::uint64_t seed, int side) {
  Dataset ds;
  ds.class_count = 10;
  ds.provenance = "synth(seed=" + std::to_string(seed) + ")";
  ds.images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng label_rng = Rng::substream(seed ^ 0x5151515151515151ull, i);
    const int digit = static_cast<int>(label_rng.below(10));
    ds.images.push_back(synth_digit(digit, seed, i, side));
  }
  return ds;
}

SynthFiles write_synth_idx(const std::string& dir, std::size_t train_count,
                           std::size_t test_count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  SynthFiles files;
  files.train_images = dir + "/train-images-idx3-ubyte";
  files.train_labels = dir + "/train-labels-idx1-ubyte";
  files.test_images = dir + "/t10k-images-idx3-ubyte";
  files.test_labels = dir + "/t10k-labels-idx1-ubyte";

  auto emit = [](const Dataset& ds, const std::string& images_path,
                 const std::string& labels_path) {
    const int side = ds.images.empty() ? 28 : ds.images.front().side;
    std::vector<std::uint8_t> pixels;
    std::vector<std::uint8_t> labels;
    pixels.reserve(ds.size() * side * side);
    labels.reserve(ds.size());
    for (const Image& img : ds.images) {
      for (double v : img.pixels) {
        pixels.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
      }
      labels.push_back(static_cast<std::uint8_t>(img.label));
    }
    write_idx_images(images_path, ds.size(), side, side, pixels);
    write_idx_labels(labels_path, labels);
  };

  emit(synth_dataset(train_count, seed), files.train_images, files.train_labels);
  emit(synth_dataset(test_count, seed ^ 0x7e57da7a5eedull), files.test_images,
       files.test_labels);
  return files;
}

}  // namespace saak
