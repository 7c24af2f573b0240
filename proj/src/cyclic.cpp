#include "spreadlab/cyclic.hpp"

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace spreadlab {

namespace {

// The FFTW planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n)
{
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (p == nullptr)
        throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

class Plan {
public:
    explicit Plan(fftw_plan p) : plan_(p) {}
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

void require_same_length(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("cyclic: operands must be non-empty and of equal length");
}

// Inverse DFT of A(f) * B(f) or A(f) * conj(B(f)), scaled by 1/N.
std::vector<double> spectral_product(std::span<const double> a, std::span<const double> b, bool conjugate_b)
{
    const std::size_t n = a.size();
    const std::size_t nf = n / 2 + 1;
    auto ra = fftw_buffer<double>(n);
    auto rb = fftw_buffer<double>(n);
    auto fa = fftw_buffer<fftw_complex>(nf);
    auto fb = fftw_buffer<fftw_complex>(nf);

    std::unique_ptr<Plan> pa, pb, pinv;
    {
        std::lock_guard lock(planner_mutex());
        const int ni = static_cast<int>(n);
        pa = std::make_unique<Plan>(fftw_plan_dft_r2c_1d(ni, ra.get(), fa.get(), FFTW_ESTIMATE));
        pb = std::make_unique<Plan>(fftw_plan_dft_r2c_1d(ni, rb.get(), fb.get(), FFTW_ESTIMATE));
        pinv = std::make_unique<Plan>(fftw_plan_dft_c2r_1d(ni, fa.get(), ra.get(), FFTW_ESTIMATE));
    }
    std::copy(a.begin(), a.end(), ra.get());
    std::copy(b.begin(), b.end(), rb.get());
    pa->execute();
    pb->execute();

    for (std::size_t f = 0; f < nf; ++f) {
        const std::complex<double> za(fa[f][0], fa[f][1]);
        std::complex<double> zb(fb[f][0], fb[f][1]);
        if (conjugate_b)
            zb = std::conj(zb);
        const auto z = za * zb;
        fa[f][0] = z.real();
        fa[f][1] = z.imag();
    }
    pinv->execute();

    std::vector<double> out(ra.get(), ra.get() + n);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out)
        v *= scale;
    return out;
}

} // namespace

std::vector<double> cyclic_convolve_direct(std::span<const double> a, std::span<const double> b)
{
    require_same_length(a, b);
    const std::size_t n = a.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (b[k] == 0.0)
            continue;
        for (std::size_t m = 0; m < n; ++m)
            out[(m + k) % n] += a[m] * b[k];
    }
    return out;
}

std::vector<double> cyclic_convolve_fft(std::span<const double> a, std::span<const double> b)
{
    require_same_length(a, b);
    return spectral_product(a, b, false);
}

std::vector<double> cyclic_convolve(std::span<const double> a, std::span<const double> b)
{
    return a.size() > kFastTransformThreshold ? cyclic_convolve_fft(a, b) : cyclic_convolve_direct(a, b);
}

std::vector<double> cyclic_correlate_direct(std::span<const double> w, std::span<const double> a)
{
    require_same_length(w, a);
    const std::size_t n = w.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n; ++m)
            acc += w[(m + k) % n] * a[m];
        out[k] = acc;
    }
    return out;
}

std::vector<double> cyclic_correlate_fft(std::span<const double> w, std::span<const double> a)
{
    require_same_length(w, a);
    return spectral_product(w, a, true);
}

std::vector<double> cyclic_correlate(std::span<const double> w, std::span<const double> a)
{
    return w.size() > kFastTransformThreshold ? cyclic_correlate_fft(w, a) : cyclic_correlate_direct(w, a);
}

double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("dot: length mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a)
{
    return dot(a, a);
}

} // namespace spreadlab
