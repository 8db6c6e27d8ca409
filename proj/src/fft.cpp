#include "vortexgate/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace vortexgate {

namespace {

// FFTW's planner is not reentrant; plan execution with the new-array
// interface is.  Plans are made FFTW_UNALIGNED so any std::vector buffer
// can be passed at execution time.
class PlanCache {
public:
    ~PlanCache()
    {
        for (auto& [key, plan] : plans_)
            fftw_destroy_plan(plan);
    }

    fftw_plan get(int rank, int n, int howmany, int sign)
    {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(rank, n, howmany, sign);
        if (auto it = plans_.find(key); it != plans_.end())
            return it->second;
        const std::size_t len = rank == 2 ? static_cast<std::size_t>(n) * n
                                          : static_cast<std::size_t>(n) * howmany;
        std::vector<fftw_complex> scratch(len);
        fftw_plan plan = nullptr;
        constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (rank == 2) {
            plan = fftw_plan_dft_2d(n, n, scratch.data(), scratch.data(), sign, flags);
        } else {
            int dims[1] = {n};
            plan = fftw_plan_many_dft(1, dims, howmany, scratch.data(), nullptr, 1, n,
                                      scratch.data(), nullptr, 1, n, sign, flags);
        }
        if (plan == nullptr)
            throw std::runtime_error("FFTW failed to create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

PlanCache& cache()
{
    static PlanCache c;
    return c;
}

int sign_of(FftDirection dir) { return dir == FftDirection::Forward ? FFTW_FORWARD : FFTW_BACKWARD; }

} // namespace

void fft2d(std::span<std::complex<double>> data, int n, FftDirection dir)
{
    if (data.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("fft2d: buffer size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(2, n, 1, sign_of(dir)), p, p);
}

void fft_rows(std::span<std::complex<double>> data, int n, int count, FftDirection dir)
{
    if (data.size() != static_cast<std::size_t>(n) * count)
        throw std::invalid_argument("fft_rows: buffer size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(cache().get(1, n, count, sign_of(dir)), p, p);
}

} // namespace vortexgate
