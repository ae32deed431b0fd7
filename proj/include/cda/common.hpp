#ifndef CDA_COMMON_HPP
#define CDA_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cda
{

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using Vector3 = Eigen::Vector3d;
using NodeId = std::size_t;

inline constexpr double kSpeedOfLight = 299'792'458.0; // m/s, exact
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline constexpr double kPico = 1e-12;
inline constexpr double kNano = 1e-9;

/// Wraps an angle into [0, 2*pi).
inline double wrap_phase(double radians)
{
    double r = std::fmod(radians, kTwoPi);
    if (r < 0.0)
        r += kTwoPi;
    if (r >= kTwoPi)
        r = 0.0;
    return r;
}

/// Wraps an angle into [-pi, pi).
inline double wrap_phase_signed(double radians)
{
    double r = wrap_phase(radians + kPi) - kPi;
    return r;
}

/// Fractional part of f * t in [0, 1), with the product's rounding error
/// recovered by fma so that large t keeps sub-picosecond phase resolution.
inline double cycle_fraction(double f, double t)
{
    const double hi = f * t;
    const double lo = std::fma(f, t, -hi);
    double frac = (hi - std::floor(hi)) + lo;
    frac -= std::floor(frac);
    return frac >= 1.0 ? 0.0 : frac;
}

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double power_to_db(double p) { return 10.0 * std::log10(p); }

// Error hierarchy. The CLI maps ConfigError to exit status 1 and every other
// cda::Error to exit status 2.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class SignalError : public Error
{
public:
    using Error::Error;
};

class LostExchange : public Error
{
public:
    LostExchange(NodeId tx, NodeId rx, const std::string& why)
        : Error("lost exchange " + std::to_string(tx) + "->" + std::to_string(rx) + ": " + why), tx_(tx), rx_(rx)
    {}
    NodeId tx() const { return tx_; }
    NodeId rx() const { return rx_; }

private:
    NodeId tx_;
    NodeId rx_;
};

class RefinementDivergence : public Error
{
public:
    RefinementDivergence(std::size_t step, const std::string& why)
        : Error("refinement diverged at step " + std::to_string(step) + ": " + why), step_(step)
    {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

class UnreachableNode : public Error
{
public:
    using Error::Error;
};

class CalibrationError : public Error
{
public:
    using Error::Error;
};

class EvaluationError : public Error
{
public:
    using Error::Error;
};

} // namespace cda

#endif // CDA_COMMON_HPP
