#include "hgrf/simulation.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <mutex>
#include <sstream>

#include "hgrf/errors.hpp"
#include "hgrf/random.hpp"

namespace hgrf {

namespace {

// The FFTW planner is not thread-safe; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  std::complex<double>* c() { return reinterpret_cast<std::complex<double>*>(data); }
  fftw_complex* data;
};

// Torus index k in [0, m) -> signed lag representatives. Two at the Nyquist index.
int representatives(int k, int m, int out[2]) {
  if (2 * k == m) {
    out[0] = k;
    out[1] = -k;
    return 2;
  }
  out[0] = (2 * k < m) ? k : k - m;
  return 1;
}

}  // namespace

struct CirculantSimulator::Plan {
  fftw_plan forward = nullptr;
  ~Plan() {
    if (forward != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(forward);
    }
  }
};

CirculantSimulator::CirculantSimulator(const ModelParams& p, const GridSpec& g,
                                       std::vector<VariableId> vars, const SimulationOptions& opts)
    : grid_(g), vars_(std::move(vars)) {
  g.validate();
  if (vars_.empty()) throw DomainError("simulate: no variables requested");
  if (opts.max_padding < 2) throw DomainError("simulate: max_padding must be at least 2");
  const CrossCovariance cov(p);
  cov.require_smoothness(vars_);

  double most_negative = 0.0;
  for (int pad = 2; pad <= opts.max_padding; pad *= 2) {
    if (embed(cov, pad, opts.clip_tolerance, most_negative)) {
      pad_ = pad;
      break;
    }
  }
  if (pad_ == 0) {
    std::ostringstream os;
    os << "circulant embedding failed up to padding " << opts.max_padding
       << "; most negative eigenvalue " << most_negative;
    throw SimulationError(os.str(), most_negative);
  }

  plan_ = std::make_unique<Plan>();
  FftwBuffer buf(static_cast<std::size_t>(m1_) * m2_);
  std::lock_guard lock(planner_mutex());
  plan_->forward = fftw_plan_dft_2d(m2_, m1_, buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
}

CirculantSimulator::~CirculantSimulator() = default;

bool CirculantSimulator::embed(const CrossCovariance& cov, int pad, double tol,
                               double& most_negative) {
  const int p = static_cast<int>(vars_.size());
  const int m1 = pad * grid_.nx;
  const int m2 = pad * grid_.ny;
  const std::size_t m = static_cast<std::size_t>(m1) * m2;

  // Covariance of every pair on the torus; Nyquist lags average their +/- representatives
  // so that the embedding stays symmetric.
  std::vector<double> lagcov(m * p * p);
  bool finite = true;
#pragma omp parallel for schedule(dynamic, 16) reduction(&& : finite)
  for (int k2 = 0; k2 < m2; ++k2) {
    Eigen::MatrixXd block;
    Eigen::MatrixXd acc(p, p);
    int r1[2], r2[2];
    const int n2 = representatives(k2, m2, r2);
    for (int k1 = 0; k1 < m1; ++k1) {
      const int n1 = representatives(k1, m1, r1);
      acc.setZero();
      for (int a = 0; a < n1; ++a)
        for (int b = 0; b < n2; ++b) {
          cov.evaluate_block(vars_, {r1[a] * grid_.dx, r2[b] * grid_.dy}, block);
          acc += block;
        }
      acc /= static_cast<double>(n1 * n2);
      finite = finite && acc.allFinite();
      const std::size_t w = static_cast<std::size_t>(k2) * m1 + k1;
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) lagcov[(static_cast<std::size_t>(i) * p + j) * m + w] = acc(i, j);
    }
  }
  if (!finite) throw ConsistencyError("simulate: non-finite covariance on the embedding torus");

  // Spectral matrices S_ij(w) = sum_k c_ij(k) exp(-2 pi i w.k / m).
  std::vector<std::complex<double>> spec(m * p * p);
  {
    FftwBuffer buf(m);
    fftw_plan plan;
    {
      std::lock_guard lock(planner_mutex());
      plan = fftw_plan_dft_2d(m2, m1, buf.data, buf.data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) {
        const double* src = &lagcov[(static_cast<std::size_t>(i) * p + j) * m];
        for (std::size_t w = 0; w < m; ++w) buf.c()[w] = src[w];
        fftw_execute(plan);
        for (std::size_t w = 0; w < m; ++w) {
          // column-major p x p per frequency
          spec[w * p * p + j * p + i] = buf.c()[w];
          spec[w * p * p + i * p + j] = std::conj(buf.c()[w]);
        }
      }
    }
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  lagcov.clear();
  lagcov.shrink_to_fit();

  std::vector<double> eig(m * p);
  double max_eig = 0.0;
#pragma omp parallel for schedule(static) reduction(max : max_eig)
  for (std::size_t w = 0; w < m; ++w) {
    Eigen::Map<Eigen::MatrixXcd> s(&spec[w * p * p], p, p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
    for (int i = 0; i < p; ++i) eig[w * p + i] = es.eigenvalues()[i];
    s = es.eigenvectors();  // spec now holds the eigenvectors
    max_eig = std::max(max_eig, es.eigenvalues()[p - 1]);
  }
  double min_eig = 0.0;
  long n_clip = 0;
  for (double e : eig) {
    min_eig = std::min(min_eig, e);
    if (e < 0.0) ++n_clip;
  }
  most_negative = min_eig;
  if (min_eig < -tol * max_eig) return false;

#pragma omp parallel for schedule(static)
  for (std::size_t w = 0; w < m; ++w) {
    Eigen::Map<Eigen::MatrixXcd> q(&spec[w * p * p], p, p);
    for (int i = 0; i < p; ++i) q.col(i) *= std::sqrt(std::max(eig[w * p + i], 0.0));
  }
  factor_ = std::move(spec);
  m1_ = m1;
  m2_ = m2;
  clipped_ = min_eig;
  clipped_count_ = n_clip;
  return true;
}

GridField CirculantSimulator::realization(std::uint64_t seed, std::uint64_t index) const {
  const int p = static_cast<int>(vars_.size());
  const std::size_t m = static_cast<std::size_t>(m1_) * m2_;
  std::mt19937_64 rng = substream(seed, index);
  std::normal_distribution<double> normal;

  std::vector<std::unique_ptr<FftwBuffer>> comp;
  for (int i = 0; i < p; ++i) {
    comp.push_back(std::make_unique<FftwBuffer>(m));
    std::fill_n(comp.back()->c(), m, std::complex<double>(0.0, 0.0));
  }
  std::vector<std::complex<double>> z(p);
  for (std::size_t w = 0; w < m; ++w) {
    for (int j = 0; j < p; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      z[j] = {re, im};
    }
    const std::complex<double>* f = &factor_[w * p * p];  // column-major p x p
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < p; ++i) comp[i]->c()[w] += f[j * p + i] * z[j];
  }

  GridField out(grid_, vars_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < p; ++i) {
    fftw_execute_dft(plan_->forward, comp[i]->data, comp[i]->data);
    const std::complex<double>* y = comp[i]->c();
    for (int k2 = 0; k2 < grid_.ny; ++k2)
      for (int k1 = 0; k1 < grid_.nx; ++k1)
        out.at(i, k1, k2) = scale * y[static_cast<std::size_t>(k2) * m1_ + k1].real();
  }
  return out;
}

std::vector<GridField> simulate(const ModelParams& p, const GridSpec& g,
                                const std::vector<VariableId>& vars, std::uint64_t seed, int n,
                                const SimulationOptions& opts) {
  if (n < 0) throw DomainError("simulate: negative realization count");
  if (n == 0) return {};
  const CirculantSimulator sim(p, g, vars, opts);
  std::vector<GridField> out(n);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) out[k] = sim.realization(seed, static_cast<std::uint64_t>(k));
  return out;
}

}  // namespace hgrf
