#include "purephase/frames.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "purephase/errors.hpp"
#include "purephase/report.hpp"

namespace purephase {

double DetectorConfig::expected_occupancy() const {
  // Every pair puts one photon per arm on average; darks are per pixel.
  const double pixels = static_cast<double>(width * height);
  return mean_pair_rate / pixels + dark_count_prob;
}

void DetectorConfig::validate() const {
  if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) {
    throw DomainError{"detector pixel pitch must be positive"};
  }
  if (width == 0 || height == 0) {
    throw DomainError{"detector must have at least one pixel"};
  }
  if (width * height > (std::size_t{1} << 31)) {
    throw DomainError{"detector too large"};
  }
  if (!(mean_pair_rate >= 0.0) || !std::isfinite(mean_pair_rate)) {
    throw DomainError{"mean pair rate must be non-negative"};
  }
  if (!(dark_count_prob >= 0.0 && dark_count_prob <= 1.0)) {
    throw DomainError{"dark count probability must lie in [0, 1]"};
  }
  if (!(rate_jitter >= 0.0) || !std::isfinite(rate_jitter)) {
    throw DomainError{"rate jitter must be non-negative"};
  }
  if (expected_occupancy() > 1.0) {
    throw DomainError{"mean occupancy " + std::to_string(expected_occupancy()) +
                      " counts/pixel/frame exceeds 1; photon counting is meaningless"};
  }
}

double auto_pitch(const Bivariate& cov, std::size_t width) {
  if (width == 0) {
    throw DomainError{"auto_pitch: width must be positive"};
  }
  const double s = std::sqrt(std::max(cov.var1, cov.var2));
  return 8.0 * s / static_cast<double>(width);
}

FrameStack::FrameStack(FrameGeometry geometry, bool binary, std::uint64_t seed)
    : geom_{geometry}, binary_{binary}, seed_{seed} {
  if (geom_.arms == 0 || geom_.arms > 2 || geom_.width == 0 || geom_.height == 0 || !(geom_.pitch > 0.0)) {
    throw DomainError{"FrameStack: invalid geometry"};
  }
}

void FrameStack::push_frame(std::vector<std::vector<Hit>> arms) {
  if (arms.size() != geom_.arms) {
    throw DomainError{"FrameStack: frame has wrong number of arms"};
  }
  const auto npix = static_cast<std::uint32_t>(geom_.pixels());
  for (auto& img : arms) {
    std::sort(img.begin(), img.end(), [](const Hit& a, const Hit& b) { return a.pixel < b.pixel; });
    std::size_t out = 0;
    for (std::size_t k = 0; k < img.size(); ++k) {
      if (img[k].pixel >= npix) {
        throw DomainError{"FrameStack: hit outside the detector"};
      }
      if (img[k].count == 0) {
        continue;
      }
      if (out > 0 && img[out - 1].pixel == img[k].pixel) {
        const unsigned sum = img[out - 1].count + img[k].count;
        img[out - 1].count = static_cast<std::uint16_t>(std::min(sum, 65535u));
      } else {
        img[out++] = img[k];
      }
    }
    img.resize(out);
    for (auto& h : img) {
      if (binary_) {
        h.count = 1;
      }
      hits_.push_back(h);
    }
    offsets_.push_back(hits_.size());
  }
}

std::span<const Hit> FrameStack::image(std::size_t frame, std::size_t arm) const {
  const std::size_t k = frame * geom_.arms + arm;
  if (frame >= size() || arm >= geom_.arms) {
    throw DomainError{"FrameStack: frame or arm index out of range"};
  }
  return std::span<const Hit>{hits_}.subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
}

std::vector<std::uint32_t> FrameStack::columns(std::size_t frame, std::size_t arm) const {
  std::vector<std::uint32_t> c(geom_.width, 0);
  for (const Hit& h : image(frame, arm)) {
    c[h.pixel % geom_.width] += h.count;
  }
  return c;
}

std::uint64_t FrameStack::total_counts(std::size_t arm) const {
  std::uint64_t total = 0;
  for (std::size_t f = 0; f < size(); ++f) {
    for (const Hit& h : image(f, arm)) {
      total += h.count;
    }
  }
  return total;
}

double FrameStack::mean_occupancy(std::size_t arm) const {
  if (size() == 0) {
    return 0.0;
  }
  return static_cast<double>(total_counts(arm)) / (static_cast<double>(size()) * static_cast<double>(geom_.pixels()));
}

FrameStack FrameStack::permuted(std::span<const std::size_t> order) const {
  if (order.size() != size()) {
    throw DomainError{"FrameStack::permuted: order has wrong length"};
  }
  FrameStack out{geom_, binary_, seed_};
  out.metadata = metadata;
  for (std::size_t f : order) {
    std::vector<std::vector<Hit>> arms;
    for (std::size_t a = 0; a < geom_.arms; ++a) {
      const auto img = image(f, a);
      arms.emplace_back(img.begin(), img.end());
    }
    out.push_frame(std::move(arms));
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

struct Cholesky2 {
  double l11, l21, l22;
};

Cholesky2 cholesky(const Bivariate& c) {
  if (!(c.var1 > 0.0) || !(c.var1 * c.var2 - c.cov12 * c.cov12 > 0.0)) {
    throw DomainError{"covariance is not positive definite"};
  }
  const double l11 = std::sqrt(c.var1);
  const double l21 = c.cov12 / l11;
  return {l11, l21, std::sqrt(c.var2 - l21 * l21)};
}

Sample2 draw(const Cholesky2& l, std::normal_distribution<double>& n, std::mt19937_64& rng) {
  const double z1 = n(rng);
  const double z2 = n(rng);
  return {l.l11 * z1, l.l21 * z1 + l.l22 * z2};
}

// How the photons of a pair reach the detectors.
enum class Routing { beamsplitter, single_detector };

struct Job {
  Cholesky2 chol;
  Routing routing;
  DetectorConfig det;
  FrameGeometry geom;
};

struct FrameTally {
  std::uint64_t pairs = 0;
  std::uint64_t split = 0;
};

class Binner {
 public:
  explicit Binner(const FrameGeometry& g) : g_{g} {}

  // Pixel index for (x, y) or -1 when the photon misses the sensor.
  long long index(double x, double y) const {
    const double half_w = 0.5 * static_cast<double>(g_.width - 1);
    const double half_h = 0.5 * static_cast<double>(g_.height - 1);
    const double ix = std::floor(x / g_.pitch + half_w + 0.5);
    const double iy = g_.height > 1 ? std::floor(y / g_.pitch + half_h + 0.5) : 0.0;
    if (ix < 0.0 || ix >= static_cast<double>(g_.width) || iy < 0.0 || iy >= static_cast<double>(g_.height)) {
      return -1;
    }
    return static_cast<long long>(iy) * static_cast<long long>(g_.width) + static_cast<long long>(ix);
  }

 private:
  FrameGeometry g_;
};

void deposit(std::vector<Hit>& img, long long idx) {
  if (idx >= 0) {
    img.push_back(Hit{static_cast<std::uint32_t>(idx), 1});
  }
}

std::vector<std::vector<Hit>> make_frame(const Job& job, std::size_t index, FrameTally& tally) {
  std::mt19937_64 rng{splitmix64(job.det.seed ^ static_cast<std::uint64_t>(index))};
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_int_distribution<int> coin{0, 1};
  const Binner bin{job.geom};
  const bool two_d = job.geom.height > 1;

  double rate = job.det.mean_pair_rate;
  if (job.det.rate_jitter > 0.0 && rate > 0.0) {
    const double k = 1.0 / (job.det.rate_jitter * job.det.rate_jitter);
    rate *= std::gamma_distribution<double>{k, 1.0 / k}(rng);
  }
  const long pairs = rate > 0.0 ? std::poisson_distribution<long>{rate}(rng) : 0;

  std::vector<std::vector<Hit>> arms(job.geom.arms);
  for (long n = 0; n < pairs; ++n) {
    const Sample2 xs = draw(job.chol, normal, rng);
    const Sample2 ys = two_d ? draw(job.chol, normal, rng) : Sample2{0.0, 0.0};
    ++tally.pairs;
    if (job.routing == Routing::single_detector) {
      deposit(arms[0], bin.index(xs.first, ys.first));
      deposit(arms[0], bin.index(xs.second, ys.second));
      ++tally.split;
      continue;
    }
    const int r1 = coin(rng);
    const int r2 = coin(rng);
    if (r1 != r2) {
      ++tally.split;
      deposit(arms[0], bin.index(xs.first, ys.first));
      deposit(arms[1], bin.index(xs.second, ys.second));
      continue;
    }
    // Both photons in one arm: two draws from that arm's marginal.
    const Sample2 xo = draw(job.chol, normal, rng);
    const Sample2 yo = two_d ? draw(job.chol, normal, rng) : Sample2{0.0, 0.0};
    if (!job.det.keep_unsplit) {
      continue;
    }
    if (r1 == 0) {
      deposit(arms[0], bin.index(xs.first, ys.first));
      deposit(arms[0], bin.index(xo.first, yo.first));
    } else {
      deposit(arms[1], bin.index(xs.second, ys.second));
      deposit(arms[1], bin.index(xo.second, yo.second));
    }
  }

  if (job.det.dark_count_prob > 0.0) {
    const auto npix = static_cast<long>(job.geom.pixels());
    std::uniform_int_distribution<long> where{0, npix - 1};
    for (auto& img : arms) {
      const long darks = std::binomial_distribution<long>{npix, job.det.dark_count_prob}(rng);
      for (long d = 0; d < darks; ++d) {
        img.push_back(Hit{static_cast<std::uint32_t>(where(rng)), 1});
      }
    }
  }
  return arms;
}

FrameStack run(const Job& job, std::size_t n_frames, unsigned threads) {
  job.det.validate();
  FrameStack stack{job.geom, job.det.clip_to_binary, job.det.seed};
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n_frames, 1))));

  // Frames are generated in fixed blocks and appended in index order, so the
  // stack does not depend on the thread count.
  constexpr std::size_t kBlock = 4096;
  FrameTally total;
  for (std::size_t start = 0; start < n_frames; start += kBlock * threads) {
    std::vector<std::vector<std::vector<std::vector<Hit>>>> blocks(threads);
    std::vector<FrameTally> tallies(threads);
    auto work = [&](unsigned t) {
      const std::size_t b = start + t * kBlock;
      const std::size_t e = std::min(n_frames, b + kBlock);
      for (std::size_t f = b; f < e; ++f) {
        blocks[t].push_back(make_frame(job, f, tallies[t]));
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(work, t);
      }
      for (auto& th : pool) {
        th.join();
      }
    }
    for (unsigned t = 0; t < threads; ++t) {
      for (auto& frame : blocks[t]) {
        stack.push_frame(std::move(frame));
      }
      total.pairs += tallies[t].pairs;
      total.split += tallies[t].split;
    }
  }
  stack.metadata["pairs_total"] = std::to_string(total.pairs);
  stack.metadata["pairs_split"] = std::to_string(total.split);
  stack.metadata["mean_pair_rate"] = format_double(job.det.mean_pair_rate);
  stack.metadata["dark_count_prob"] = format_double(job.det.dark_count_prob);
  stack.metadata["rate_jitter"] = format_double(job.det.rate_jitter);
  stack.metadata["keep_unsplit"] = job.det.keep_unsplit ? "1" : "0";
  return stack;
}

FrameGeometry geometry_of(const DetectorConfig& det, std::size_t arms) {
  return FrameGeometry{arms, det.width, det.height, det.pixel_pitch};
}

void put_cov(FrameStack& s, const Bivariate& c) {
  s.metadata["truth_var1"] = format_double(c.var1);
  s.metadata["truth_var2"] = format_double(c.var2);
  s.metadata["truth_cov12"] = format_double(c.cov12);
}

}  // namespace

std::vector<Sample2> sample_bivariate(const Bivariate& cov, std::size_t n, std::mt19937_64& rng) {
  const auto l = cholesky(cov);
  std::normal_distribution<double> normal{0.0, 1.0};
  std::vector<Sample2> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(draw(l, normal, rng));
  }
  return out;
}

std::vector<Sample2> sample_rho_m(const MeasurementQuadratic& q, std::size_t n, std::mt19937_64& rng) {
  q.validate();
  return sample_bivariate(q.covariance(), n, rng);
}

FrameStack synthesize_frames(const MeasurementQuadratic& q, const DetectorConfig& det, std::size_t n_frames,
                             unsigned threads) {
  q.validate();
  const auto cov = q.covariance();
  auto stack = run(Job{cholesky(cov), Routing::beamsplitter, det, geometry_of(det, 2)}, n_frames, threads);
  put_cov(stack, cov);
  stack.metadata["kind"] = "measurement";
  stack.metadata["truth_a"] = format_double(q.a);
  stack.metadata["truth_b"] = format_double(q.b);
  stack.metadata["truth_c"] = format_double(q.c);
  return stack;
}

FrameStack synthesize_position_frames(const GaussianBiphotonState& state, const DetectorConfig& det,
                                      std::size_t n_frames, unsigned threads) {
  const auto cov = state.intensity_covariance();
  auto stack = run(Job{cholesky(cov), Routing::beamsplitter, det, geometry_of(det, 2)}, n_frames, threads);
  put_cov(stack, cov);
  stack.metadata["kind"] = "position";
  stack.metadata["truth_fedorov"] = format_double(fedorov_ratio(state));
  return stack;
}

Bivariate nearfield_covariance(const DGParams& p) { return dg_state(p, 1.0).intensity_covariance(); }

Bivariate farfield_covariance(const DGParams& p, double wavelength, double focal) {
  if (!(focal > 0.0)) {
    throw DomainError{"far-field focal length must be positive"};
  }
  Bivariate c = momentum_covariance(dg_state(p, wavelength));
  const double s = wavelength * focal / (2.0 * kPi);
  c.var1 *= s * s;
  c.var2 *= s * s;
  c.cov12 *= s * s;
  return c;
}

FrameStack synthesize_nearfield(const DGParams& p, const DetectorConfig& det, std::size_t n_frames,
                                unsigned threads) {
  const auto cov = nearfield_covariance(p);
  auto stack = run(Job{cholesky(cov), Routing::single_detector, det, geometry_of(det, 1)}, n_frames, threads);
  put_cov(stack, cov);
  stack.metadata["kind"] = "nearfield";
  stack.metadata["truth_sigma_plus"] = format_double(p.sigma_plus);
  stack.metadata["truth_sigma_minus"] = format_double(p.sigma_minus);
  return stack;
}

FrameStack synthesize_farfield(const DGParams& p, double wavelength, double focal, const DetectorConfig& det,
                               std::size_t n_frames, unsigned threads) {
  const auto cov = farfield_covariance(p, wavelength, focal);
  auto stack = run(Job{cholesky(cov), Routing::single_detector, det, geometry_of(det, 1)}, n_frames, threads);
  put_cov(stack, cov);
  stack.metadata["kind"] = "farfield";
  stack.metadata["wavelength"] = format_double(wavelength);
  stack.metadata["focal"] = format_double(focal);
  stack.metadata["truth_sigma_plus"] = format_double(p.sigma_plus);
  stack.metadata["truth_sigma_minus"] = format_double(p.sigma_minus);
  return stack;
}

namespace {

constexpr char kMagic[4] = {'P', 'P', 'F', '1'};
constexpr std::uint32_t kFlagBitpacked = 1u;
constexpr std::uint32_t kFlagTwoD = 2u;

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    b[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw FormatError{"PPF1: truncated header"};
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &d, sizeof bits);
  put_le<std::uint64_t>(os, bits);
}

double get_f64(std::istream& is) {
  const auto bits = get_le<std::uint64_t>(is);
  double d = 0.0;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace

void write_ppf(const FrameStack& stack, const std::string& path) {
  std::ofstream os{path, std::ios::binary};
  if (!os) {
    throw FormatError{"cannot open " + path + " for writing"};
  }
  const auto& g = stack.geometry();
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.arms));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.width));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.height));
  put_f64(os, g.pitch);
  put_le<std::uint64_t>(os, stack.size());
  put_le<std::uint32_t>(os, (stack.binary() ? kFlagBitpacked : 0u) | (g.height > 1 ? kFlagTwoD : 0u));
  put_le<std::uint64_t>(os, stack.seed());

  const std::size_t npix = g.pixels();
  const std::size_t bytes = stack.binary() ? (npix + 7) / 8 : npix;
  std::vector<unsigned char> buf(bytes);
  for (std::size_t f = 0; f < stack.size(); ++f) {
    for (std::size_t a = 0; a < g.arms; ++a) {
      std::fill(buf.begin(), buf.end(), 0);
      for (const Hit& h : stack.image(f, a)) {
        if (stack.binary()) {
          buf[h.pixel / 8] |= static_cast<unsigned char>(1u << (h.pixel % 8));
        } else {
          if (h.count > 255) {
            throw FormatError{"PPF1: count exceeds u8 range"};
          }
          buf[h.pixel] = static_cast<unsigned char>(h.count);
        }
      }
      os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
  }
  if (!os) {
    throw FormatError{"write failed: " + path};
  }

  std::ofstream meta{path + ".meta"};
  for (const auto& [k, v] : stack.metadata) {
    meta << k << '=' << v << '\n';
  }
}

FrameStack read_ppf(const std::string& path) {
  std::ifstream is{path, std::ios::binary};
  if (!is) {
    throw FormatError{"cannot open " + path};
  }
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError{path + ": not a PPF1 file"};
  }
  FrameGeometry g;
  g.arms = get_le<std::uint32_t>(is);
  g.width = get_le<std::uint32_t>(is);
  g.height = get_le<std::uint32_t>(is);
  g.pitch = get_f64(is);
  const auto n_frames = get_le<std::uint64_t>(is);
  const auto flags = get_le<std::uint32_t>(is);
  const auto seed = get_le<std::uint64_t>(is);
  if (g.arms < 1 || g.arms > 2 || g.width == 0 || g.height == 0 || !(g.pitch > 0.0)) {
    throw FormatError{path + ": invalid PPF1 geometry"};
  }
  if (((flags & kFlagTwoD) != 0) != (g.height > 1)) {
    throw FormatError{path + ": 2D flag disagrees with height"};
  }
  const bool binary = (flags & kFlagBitpacked) != 0;
  FrameStack stack{g, binary, seed};
  const std::size_t npix = g.pixels();
  const std::size_t bytes = binary ? (npix + 7) / 8 : npix;
  std::vector<unsigned char> buf(bytes);
  for (std::uint64_t f = 0; f < n_frames; ++f) {
    std::vector<std::vector<Hit>> arms(g.arms);
    for (std::size_t a = 0; a < g.arms; ++a) {
      if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
        throw FormatError{path + ": truncated frame data"};
      }
      for (std::size_t p = 0; p < npix; ++p) {
        const unsigned v = binary ? (buf[p / 8] >> (p % 8)) & 1u : buf[p];
        if (v != 0) {
          arms[a].push_back(Hit{static_cast<std::uint32_t>(p), static_cast<std::uint16_t>(v)});
        }
      }
    }
    stack.push_frame(std::move(arms));
  }
  if (std::ifstream meta{path + ".meta"}; meta) {
    stack.metadata = parse_key_values(meta);
  }
  return stack;
}

}  // namespace purephase
