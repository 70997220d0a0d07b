#include "parawell/qwiener.hpp"

#include "parawell/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

namespace parawell {

NoiseSpec::NoiseSpec(NoiseKind kind, double lambda_e, double lambda_h, bool shared_w)
    : kind_(kind), lambda_e_(lambda_e), lambda_h_(lambda_h), shared_w_(shared_w) {
  if (!std::isfinite(lambda_e) || !std::isfinite(lambda_h)) {
    throw DomainError("noise scales must be finite");
  }
  if (const auto* s = std::get_if<TraceClassSeries>(&kind_)) {
    if (!(s->delta > 0.0)) throw DomainError("trace-class noise needs delta > 0");
    if (!(s->r >= 0.0)) throw DomainError("trace-class noise needs r >= 0");
    if (!(s->a > 0.0)) throw DomainError("trace-class noise needs a > 0");
    if (s->n_modes < 1) throw DomainError("trace-class noise needs n_modes >= 1");
  }
}

int NoiseSpec::modes() const noexcept {
  if (const auto* s = std::get_if<TraceClassSeries>(&kind_)) return s->n_modes;
  return 1;
}

NoiseSpec NoiseSpec::with_scales(double lambda_e, double lambda_h) const {
  return NoiseSpec(kind_, lambda_e, lambda_h, shared_w_);
}

double eigenvalue(const TraceClassSeries& series, int n) {
  return std::pow(static_cast<double>(n), -(2.0 * series.r + 1.0 + series.delta));
}

double truncated_trace(const TraceClassSeries& series) {
  double sum = 0.0;
  for (int n = 1; n <= series.n_modes; ++n) sum += eigenvalue(series, n);
  return sum;
}

double trace_remainder(const TraceClassSeries& series) {
  return std::riemann_zeta(2.0 * series.r + 1.0 + series.delta) - truncated_trace(series);
}

WienerPath::WienerPath(std::uint64_t seed, int n_coarse, int n_fine_per_coarse, double dt_fine,
                       int width, std::vector<double> increments)
    : seed_(seed),
      n_coarse_(n_coarse),
      n_fine_per_coarse_(n_fine_per_coarse),
      dt_fine_(dt_fine),
      width_(width),
      increments_(std::move(increments)) {
  if (n_coarse < 1 || n_fine_per_coarse < 1) throw DomainError("path needs N, J >= 1");
  if (!(dt_fine > 0.0)) throw DomainError("path needs dt > 0");
  if (width < 1) throw DomainError("path needs width >= 1");
  const auto expected = static_cast<std::size_t>(n_coarse) *
                        static_cast<std::size_t>(n_fine_per_coarse) *
                        static_cast<std::size_t>(width);
  if (increments_.size() != expected) throw NoiseShapeError("increment count does not match N·J·width");
}

std::span<const double> WienerPath::fine_increment(int n, int j) const {
  if (n < 1 || n > n_coarse_) throw IndexError("subinterval index out of range");
  if (j < 1 || j > n_fine_per_coarse_) throw IndexError("fine step index out of range");
  const std::size_t step = static_cast<std::size_t>(n - 1) * n_fine_per_coarse_ + (j - 1);
  return {increments_.data() + step * width_, static_cast<std::size_t>(width_)};
}

WienerPath sample_path(const NoiseSpec& spec, std::uint64_t seed, int n_coarse,
                       int n_fine_per_coarse, double dt) {
  if (n_coarse < 1 || n_fine_per_coarse < 1) throw DomainError("sample_path needs N, J >= 1");
  if (!(dt > 0.0)) throw DomainError("sample_path needs dt > 0");
  const auto count = static_cast<std::size_t>(n_coarse) * n_fine_per_coarse * spec.width();
  std::vector<double> increments(count);
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  for (double& value : increments) value = normal(engine);
  return WienerPath(seed, n_coarse, n_fine_per_coarse, dt, spec.width(), std::move(increments));
}

WienerPath regroup(const WienerPath& path, int n_coarse, int n_fine_per_coarse) {
  if (n_coarse < 1 || n_fine_per_coarse < 1 ||
      static_cast<long long>(n_coarse) * n_fine_per_coarse !=
          static_cast<long long>(path.n_coarse()) * path.n_fine_per_coarse()) {
    throw MeshError("regroup: total fine step count must be preserved");
  }
  return WienerPath(path.seed(), n_coarse, n_fine_per_coarse, path.dt_fine(), path.width(),
                    path.increments());
}

WienerPath coarsen(const WienerPath& path, int factor) {
  if (factor < 1 || path.n_fine_per_coarse() % factor != 0) {
    throw MeshError("coarsen: factor must divide the fine steps per subinterval");
  }
  const auto width = static_cast<std::size_t>(path.width());
  const std::size_t steps = path.increments().size() / width;
  std::vector<double> out(steps / factor * width, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t target = s / factor;
    for (std::size_t m = 0; m < width; ++m) out[target * width + m] += path.increments()[s * width + m];
  }
  return WienerPath(path.seed(), path.n_coarse(), path.n_fine_per_coarse() / factor,
                    path.dt_fine() * factor, path.width(), std::move(out));
}

std::vector<double> coarse_increment(const WienerPath& path, int n) {
  if (n < 1 || n > path.n_coarse()) throw IndexError("coarse_increment: index out of range");
  std::vector<double> sum(static_cast<std::size_t>(path.width()), 0.0);
  for (int j = 1; j <= path.n_fine_per_coarse(); ++j) {
    const auto fine = path.fine_increment(n, j);
    for (std::size_t m = 0; m < sum.size(); ++m) sum[m] += fine[m];
  }
  return sum;
}

std::uint64_t sample_seed(std::uint64_t master_seed, std::uint64_t sample_index) {
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (sample_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

NoiseInjector::NoiseInjector(NoiseSpec spec, GridPtr grid)
    : spec_(std::move(spec)), grid_(std::move(grid)) {
  if (const auto* s = std::get_if<TraceClassSeries>(&spec_.kind())) {
    const Grid& g = *grid_;
    modes_.resize(g.nx(), s->n_modes);
    const double norm = std::sqrt(2.0 / s->a);
    for (int n = 1; n <= s->n_modes; ++n) {
      const double amplitude = norm * std::sqrt(eigenvalue(*s, n));
      for (int i = 0; i < g.nx(); ++i) {
        modes_(i, n - 1) = amplitude * std::sin(n * std::numbers::pi * g.x(i) / s->a);
      }
    }
  }
}

void NoiseInjector::add_to(FieldState& state, std::span<const double> increment) const {
  if (increment.size() != static_cast<std::size_t>(spec_.width())) {
    throw NoiseShapeError("increment width does not match the noise spec");
  }
  if (!(state.grid() == *grid_)) throw GridMismatch("noise injector built for another grid");
  const Grid& g = *grid_;
  const int modes = spec_.modes();
  const double* electric = increment.data();
  const double* magnetic = increment.data() + (spec_.shared_w() ? 0 : modes);

  const bool electric_on = spec_.lambda_e() != 0.0;
  const bool magnetic_on = spec_.lambda_h() != 0.0;

  if (!spec_.is_trace_class()) {
    if (electric_on) state.component(0).array() += spec_.lambda_e() * electric[0];
    for (int c = 1; magnetic_on && c < g.components(); ++c) {
      state.component(c).array() += spec_.lambda_h() * magnetic[0];
    }
    return;
  }
  if (!electric_on && !magnetic_on) return;

  const Eigen::Map<const Eigen::VectorXd> beta_e(electric, modes);
  const Eigen::Map<const Eigen::VectorXd> beta_h(magnetic, modes);
  const Eigen::VectorXd profile_e = spec_.lambda_e() * (modes_ * beta_e);
  const Eigen::VectorXd profile_h = spec_.lambda_h() * (modes_ * beta_h);
  // Modes depend on x only; every row j gets the same profile.
  for (int j = 0; j < g.ny(); ++j) {
    state.component(0).segment(Eigen::Index{j} * g.nx(), g.nx()) += profile_e;
    for (int c = 1; c < g.components(); ++c) {
      state.component(c).segment(Eigen::Index{j} * g.nx(), g.nx()) += profile_h;
    }
  }
}

FieldState NoiseInjector::inject(std::span<const double> increment) const {
  FieldState out(grid_);
  add_to(out, increment);
  return out;
}

FieldState inject_noise(const NoiseSpec& spec, const GridPtr& grid, int /*t_index*/,
                        std::span<const double> increment) {
  return NoiseInjector(spec, grid).inject(increment);
}

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'W', 'W', 'I', 'E', 'N', 'E', 'R'};

template <typename T>
void write_le(std::ostream& out, T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!in) throw IoError("truncated path file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void save_path(const std::filesystem::path& file, const WienerPath& path, const NoiseSpec& spec) {
  if (spec.width() != path.width()) throw NoiseShapeError("spec does not match the path width");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string());
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint64_t>(out, path.seed());
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(path.n_coarse()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(path.n_fine_per_coarse()));
  write_le<double>(out, path.dt_fine());
  write_le<std::uint32_t>(out, spec.is_trace_class() ? 1U : 0U);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(path.width()));
  for (double v : path.increments()) write_le<double>(out, v);
  if (!out) throw IoError("write failed for " + file.string());
}

WienerPath load_path(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("not a Wiener path file: " + file.string());
  const auto seed = read_le<std::uint64_t>(in);
  const auto n = read_le<std::uint32_t>(in);
  const auto j = read_le<std::uint32_t>(in);
  const auto dt = read_le<double>(in);
  read_le<std::uint32_t>(in);  // kind, informational
  const auto width = read_le<std::uint32_t>(in);
  std::vector<double> increments(static_cast<std::size_t>(n) * j * width);
  for (double& v : increments) v = read_le<double>(in);
  return WienerPath(seed, static_cast<int>(n), static_cast<int>(j), dt, static_cast<int>(width),
                    std::move(increments));
}

}  // namespace parawell
