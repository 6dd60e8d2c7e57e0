#include "blinkwild/dft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "blinkwild/error.hpp"

namespace blinkwild {

namespace {

// FFTW planning is not thread-safe; execution with fftw_execute_dft is.
// Plans are created once per (rows, cols, direction) and live for the process.
class PlanCache {
public:
    fftw_plan get(int rows, int cols, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(rows, cols, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const std::size_t n = static_cast<std::size_t>(rows) * cols;
        auto* in = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        fftw_plan plan = fftw_plan_dft_2d(rows, cols, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        if (plan == nullptr) throw Error(ErrorKind::Numeric, "FFTW could not create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

ComplexGrid transform(const ComplexGrid& input, int sign) {
    if (input.size() == 0) throw Error(ErrorKind::InvalidArgument, "cannot transform an empty grid");
    const int rows = static_cast<int>(input.rows());
    const int cols = static_cast<int>(input.cols());
    ComplexGrid in = input;  // FFTW may not preserve input for some plans
    ComplexGrid out(rows, cols);
    fftw_execute_dft(plan_cache().get(rows, cols, sign), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

ComplexGrid dft2(const RealGrid& input) { return transform(input.cast<std::complex<double>>(), FFTW_FORWARD); }

ComplexGrid dft2(const ComplexGrid& input) { return transform(input, FFTW_FORWARD); }

ComplexGrid idft2(const ComplexGrid& spectrum) {
    ComplexGrid out = transform(spectrum, FFTW_BACKWARD);
    out /= static_cast<double>(spectrum.size());
    return out;
}

RealGrid idft2_real(const ComplexGrid& spectrum, double* max_imag) {
    const ComplexGrid full = idft2(spectrum);
    if (max_imag != nullptr) *max_imag = full.imag().abs().maxCoeff();
    return full.real();
}

}  // namespace blinkwild
