#include "pevo/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace pevo {

double bracket_h(double xi, double h) { return std::sqrt(h * h + xi * xi); }

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// splitmix64; reproducible across platforms, unlike std::normal_distribution.
struct Rng {
    unsigned long long state;
    explicit Rng(unsigned long long seed) : state(seed) {}
    unsigned long long next_u64() {
        unsigned long long z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() {  // in [0,1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
};

}  // namespace

struct Grid::Body {
    double L = 0.0;
    double h = 1.0;
    int N = 0;
    std::vector<double> x;
    std::vector<double> xi;

    fftw_plan plan_fwd = nullptr;
    fftw_plan plan_bwd = nullptr;
    mutable std::vector<cplx> buf_in, buf_out;
    mutable std::mutex fft_mutex;

    ~Body() {
        if (plan_fwd) fftw_destroy_plan(plan_fwd);
        if (plan_bwd) fftw_destroy_plan(plan_bwd);
    }
};

Grid::Grid(std::shared_ptr<const Body> body) : body_(std::move(body)) {}

Grid Grid::make(double L, int N, double h) {
    if (!(L > 0.0)) throw std::invalid_argument("Grid: L must be positive");
    if (N < 8 || !is_power_of_two(N))
        throw std::invalid_argument("Grid: N must be a power of two, N >= 8");
    if (!(h >= 1.0)) throw std::invalid_argument("Grid: h must be >= 1");

    auto body = std::make_shared<Body>();
    body->L = L;
    body->N = N;
    body->h = h;
    body->x.resize(N);
    body->xi.resize(N);
    const double dx = 2.0 * L / N;
    const double dxi = M_PI / L;
    for (int i = 0; i < N; ++i) body->x[i] = -L + dx * i;
    for (int j = 0; j < N; ++j) body->xi[j] = dxi * (j - N / 2);

    body->buf_in.resize(N);
    body->buf_out.resize(N);
    auto* in = reinterpret_cast<fftw_complex*>(body->buf_in.data());
    auto* out = reinterpret_cast<fftw_complex*>(body->buf_out.data());
    body->plan_fwd = fftw_plan_dft_1d(N, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    body->plan_bwd = fftw_plan_dft_1d(N, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!body->plan_fwd || !body->plan_bwd)
        throw std::runtime_error("Grid: FFTW plan creation failed");
    return Grid(std::move(body));
}

double Grid::L() const { return body_->L; }
int Grid::N() const { return body_->N; }
double Grid::h() const { return body_->h; }
const std::vector<double>& Grid::x_nodes() const { return body_->x; }
const std::vector<double>& Grid::xi_nodes() const { return body_->xi; }
double Grid::dx() const { return 2.0 * body_->L / body_->N; }
double Grid::dxi() const { return M_PI / body_->L; }
double Grid::xi_max() const { return M_PI / body_->L * (body_->N / 2); }

bool Grid::same_as(const Grid& other) const {
    if (body_ == other.body_) return true;
    return body_->N == other.body_->N && body_->L == other.body_->L &&
           body_->h == other.body_->h;
}

// With x_i = -L + i dx and xi_j = (pi/L)(j - N/2),
//   e^{-i xi_j x_i} = (-1)^{j + N/2} (-1)^i e^{-2 pi i i j / N},
// so both transforms are a standard DFT with sign flips on input and output.
std::vector<cplx> Grid::forward(std::span<const cplx> values) const {
    const Body& b = *body_;
    const int N = b.N;
    if (static_cast<int>(values.size()) != N)
        throw std::invalid_argument("Grid::forward: size mismatch");
    std::vector<cplx> result(N);
    const double dx = 2.0 * b.L / N;
    std::lock_guard<std::mutex> lock(b.fft_mutex);
    for (int i = 0; i < N; ++i)
        b.buf_in[i] = (i & 1) ? -values[i] : values[i];
    fftw_execute(b.plan_fwd);
    for (int j = 0; j < N; ++j) {
        const double sign = ((j + N / 2) & 1) ? -1.0 : 1.0;
        result[j] = sign * dx * b.buf_out[j];
    }
    return result;
}

std::vector<cplx> Grid::inverse(std::span<const cplx> spectrum) const {
    const Body& b = *body_;
    const int N = b.N;
    if (static_cast<int>(spectrum.size()) != N)
        throw std::invalid_argument("Grid::inverse: size mismatch");
    std::vector<cplx> result(N);
    const double scale = 1.0 / (2.0 * b.L);
    std::lock_guard<std::mutex> lock(b.fft_mutex);
    for (int j = 0; j < N; ++j) {
        const double sign = ((j + N / 2) & 1) ? -1.0 : 1.0;
        b.buf_in[j] = sign * spectrum[j];
    }
    fftw_execute(b.plan_bwd);
    for (int i = 0; i < N; ++i) {
        const double sign = (i & 1) ? -1.0 : 1.0;
        result[i] = sign * scale * b.buf_out[i];
    }
    return result;
}

StateVector::StateVector(Grid grid, std::vector<cplx> values, std::vector<cplx> spectrum)
    : grid_(std::move(grid)), values_(std::move(values)), spectrum_(std::move(spectrum)) {}

StateVector StateVector::from_values(Grid grid, std::vector<cplx> values) {
    if (static_cast<int>(values.size()) != grid.N())
        throw std::invalid_argument("StateVector: size mismatch");
    auto spec = grid.forward(values);
    return StateVector(std::move(grid), std::move(values), std::move(spec));
}

StateVector StateVector::from_spectrum(Grid grid, std::vector<cplx> spectrum) {
    if (static_cast<int>(spectrum.size()) != grid.N())
        throw std::invalid_argument("StateVector: size mismatch");
    auto vals = grid.inverse(spectrum);
    return StateVector(std::move(grid), std::move(vals), std::move(spectrum));
}

StateVector StateVector::zero(Grid grid) {
    std::vector<cplx> v(grid.N(), cplx(0.0, 0.0));
    std::vector<cplx> s(grid.N(), cplx(0.0, 0.0));
    return StateVector(std::move(grid), std::move(v), std::move(s));
}

double StateVector::norm_l2() const {
    double s = 0.0;
    for (const cplx& v : values_) s += std::norm(v);
    return std::sqrt(grid_.dx() * s);
}

StateVector spectral_derivative(const StateVector& u, int order) {
    if (order < 0) throw std::invalid_argument("spectral_derivative: order >= 0");
    const auto& xi = u.grid().xi_nodes();
    std::vector<cplx> spec = u.spectrum();
    for (size_t j = 0; j < spec.size(); ++j) spec[j] *= std::pow(xi[j], order);
    return StateVector::from_spectrum(u.grid(), std::move(spec));
}

StateVector gaussian_packet(const Grid& grid, double x0, double xi_c, double w) {
    const auto& x = grid.x_nodes();
    std::vector<cplx> v(grid.N());
    for (int i = 0; i < grid.N(); ++i) {
        const double d = x[i] - x0;
        v[i] = std::exp(-d * d / (2.0 * w * w)) *
               std::exp(cplx(0.0, xi_c * x[i]));
    }
    return StateVector::from_values(grid, std::move(v));
}

std::vector<StateVector> probe_packets(const Grid& grid, int n, unsigned long long seed) {
    Rng rng(seed);
    std::vector<StateVector> probes;
    probes.reserve(n);
    const double L = grid.L();
    const double ximax = grid.xi_max();
    for (int k = 0; k < n; ++k) {
        const double x0 = rng.uniform(-0.45 * L, 0.45 * L);
        const double xic = rng.uniform(-ximax / 4.0, ximax / 4.0);
        const double w = rng.uniform(0.08 * L, 0.14 * L);
        probes.push_back(gaussian_packet(grid, x0, xic, w));
    }
    return probes;
}

}  // namespace pevo
