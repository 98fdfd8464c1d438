#include "purephase/density.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "purephase/errors.hpp"
#include "purephase/report.hpp"

namespace purephase {

Axis Axis::centered(std::string name, std::size_t n, double pitch) {
  Axis a{std::move(name), n, -0.5 * pitch * static_cast<double>(n - 1), pitch};
  a.validate();
  return a;
}

void Axis::validate() const {
  if (n == 0) {
    throw DomainError{"axis '" + name + "' has no samples"};
  }
  if (!(pitch > 0.0) || !std::isfinite(pitch) || !std::isfinite(origin)) {
    throw DomainError{"axis '" + name + "' must be strictly increasing with finite origin"};
  }
}

Density2D::Density2D(Axis a0, Axis a1, std::vector<double> values, bool normalized)
    : a0_{std::move(a0)}, a1_{std::move(a1)}, v_{std::move(values)}, normalized_{normalized} {
  a0_.validate();
  a1_.validate();
  if (v_.size() != a0_.n * a1_.n) {
    throw DomainError{"Density2D: value count does not match axes"};
  }
}

Density2D Density2D::zeros(Axis a0, Axis a1) {
  const std::size_t n = a0.n * a1.n;
  return Density2D{std::move(a0), std::move(a1), std::vector<double>(n, 0.0)};
}

double Density2D::sum() const {
  double s = 0.0;
  for (double v : v_) {
    s += v;
  }
  return s;
}

Density2D Density2D::normalized() const {
  const double s = sum();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError{"Density2D: cannot normalize, sum is not positive"};
  }
  std::vector<double> out(v_.size());
  std::transform(v_.begin(), v_.end(), out.begin(), [s](double v) { return v / s; });
  return Density2D{a0_, a1_, std::move(out), true};
}

Density2D Density2D::clamped() const {
  std::vector<double> out(v_.size());
  std::transform(v_.begin(), v_.end(), out.begin(), [](double v) { return std::max(v, 0.0); });
  return Density2D{a0_, a1_, std::move(out), false};
}

std::vector<double> Density2D::sum_over_axis1() const {
  std::vector<double> out(a0_.n, 0.0);
  for (std::size_t i = 0; i < a0_.n; ++i) {
    for (std::size_t j = 0; j < a1_.n; ++j) {
      out[i] += (*this)(i, j);
    }
  }
  return out;
}

std::vector<double> Density2D::sum_over_axis0() const {
  std::vector<double> out(a1_.n, 0.0);
  for (std::size_t i = 0; i < a0_.n; ++i) {
    for (std::size_t j = 0; j < a1_.n; ++j) {
      out[j] += (*this)(i, j);
    }
  }
  return out;
}

double relative_l2(const Density2D& a, const Density2D& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DomainError{"relative_l2: shape mismatch"};
  }
  double num = 0.0;
  double den = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t k = 0; k < va.size(); ++k) {
    num += (va[k] - vb[k]) * (va[k] - vb[k]);
    den += vb[k] * vb[k];
  }
  if (!(den > 0.0)) {
    throw DomainError{"relative_l2: reference is zero"};
  }
  return std::sqrt(num / den);
}

namespace {

void write_axis(std::ostream& os, const char* label, const Axis& a) {
  os << "# " << label << " name=" << a.name << " n=" << a.n << " origin=" << format_double(a.origin)
     << " pitch=" << format_double(a.pitch) << '\n';
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError{"not a number: '" + s + "'"};
  }
  return v;
}

Axis parse_axis(const std::string& line) {
  std::istringstream ss{line};
  std::string tok;
  Axis a;
  bool have_n = false;
  ss >> tok >> tok;  // "#" and label
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      throw FormatError{"bad axis header token '" + tok + "'"};
    }
    const std::string k = tok.substr(0, eq);
    const std::string v = tok.substr(eq + 1);
    if (k == "name") {
      a.name = v;
    } else if (k == "n") {
      a.n = static_cast<std::size_t>(std::stoull(v));
      have_n = true;
    } else if (k == "origin") {
      a.origin = parse_double(v);
    } else if (k == "pitch") {
      a.pitch = parse_double(v);
    }
  }
  if (!have_n) {
    throw FormatError{"axis header without n"};
  }
  return a;
}

}  // namespace

void write_csv(std::ostream& os, const Density2D& d, const std::string& config_hash) {
  os << "# config_hash=" << config_hash << '\n';
  write_axis(os, "axis0", d.axis0());
  write_axis(os, "axis1", d.axis1());
  os << "# normalized=" << (d.is_normalized() ? 1 : 0) << '\n';
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      if (j > 0) {
        os << ',';
      }
      os << format_double(d(i, j));
    }
    os << '\n';
  }
}

DensityFile read_csv(std::istream& is) {
  std::string line;
  std::string hash;
  Axis a0;
  Axis a1;
  bool have0 = false;
  bool have1 = false;
  bool normalized = false;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      if (line.rfind("# config_hash=", 0) == 0) {
        hash = line.substr(14);
      } else if (line.rfind("# axis0 ", 0) == 0) {
        a0 = parse_axis(line);
        have0 = true;
      } else if (line.rfind("# axis1 ", 0) == 0) {
        a1 = parse_axis(line);
        have1 = true;
      } else if (line.rfind("# normalized=", 0) == 0) {
        normalized = line.substr(13) == "1";
      }
      continue;
    }
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      const auto end = comma == std::string::npos ? line.size() : comma;
      values.push_back(parse_double(line.substr(start, end - start)));
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
  }
  if (!have0 || !have1) {
    throw FormatError{"density CSV is missing axis header rows"};
  }
  if (values.size() != a0.n * a1.n) {
    throw FormatError{"density CSV has " + std::to_string(values.size()) + " values, header says " +
                      std::to_string(a0.n * a1.n)};
  }
  return {Density2D{a0, a1, std::move(values), normalized}, hash};
}

void write_pgm(std::ostream& os, const Density2D& d, const std::string& config_hash) {
  double peak = 0.0;
  for (double v : d.values()) {
    peak = std::max(peak, v);
  }
  os << "P5\n# config_hash=" << config_hash << '\n' << d.cols() << ' ' << d.rows() << "\n65535\n";
  for (double v : d.values()) {
    const double s = peak > 0.0 ? std::max(v, 0.0) / peak : 0.0;
    const auto p = static_cast<std::uint16_t>(std::lround(s * 65535.0));
    os.put(static_cast<char>(p >> 8));
    os.put(static_cast<char>(p & 0xff));
  }
}

namespace {

std::string pgm_token(std::istream& is) {
  std::string tok;
  char c = 0;
  while (is.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(is, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) {
        return tok;
      }
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

PgmImage read_pgm(std::istream& is) {
  if (pgm_token(is) != "P5") {
    throw FormatError{"not a binary PGM"};
  }
  PgmImage img;
  try {
    img.width = std::stoul(pgm_token(is));
    img.height = std::stoul(pgm_token(is));
    img.maxval = static_cast<unsigned>(std::stoul(pgm_token(is)));
  } catch (const std::logic_error&) {
    throw FormatError{"malformed PGM header"};
  }
  if (img.maxval == 0 || img.maxval > 65535) {
    throw FormatError{"PGM maxval out of range"};
  }
  const bool wide = img.maxval > 255;
  img.pixels.resize(img.width * img.height);
  for (auto& p : img.pixels) {
    int hi = is.get();
    if (wide) {
      const int lo = is.get();
      if (lo == EOF) {
        throw FormatError{"truncated PGM"};
      }
      p = static_cast<std::uint16_t>((hi << 8) | lo);
    } else {
      p = static_cast<std::uint16_t>(hi);
    }
    if (hi == EOF) {
      throw FormatError{"truncated PGM"};
    }
  }
  return img;
}

}  // namespace purephase
