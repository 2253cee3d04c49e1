#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace cwlaser::reference {

/// Reference upper bounds on ω(k) from the fourth-power analysis.
inline const std::vector<std::pair<double, double>>& fourth_power_table() {
    static const std::vector<std::pair<double, double>> t = {
        {0.31389, 2.0},     {0.32, 2.000064},   {0.33, 2.000448},   {0.34, 2.001118},   {0.35, 2.001957},
        {0.40, 2.010314},   {0.45, 2.024801},   {0.50, 2.044183},   {0.5286, 2.057085}, {0.55, 2.067488},
        {0.60, 2.093981},   {0.65, 2.123097},   {0.70, 2.154399},   {0.75, 2.187543},   {0.80, 2.222256},
        {0.85, 2.258317},   {0.90, 2.295544},   {0.95, 2.333789},   {1.00, 2.372927},   {1.10, 2.453481},
        {1.20, 2.536550},   {1.30, 2.621644},   {1.40, 2.708400},   {1.50, 2.796537},   {1.75, 3.021591},
        {2.00, 3.251640},   {2.50, 3.721503},   {3.00, 4.199712},   {4.00, 5.171210},   {5.00, 6.157233},
    };
    return t;
}

/// Second-power baseline.
inline const std::vector<std::pair<double, double>>& second_power_table() {
    static const std::vector<std::pair<double, double>> t = {
        {0.30298, 2.0},     {0.31, 2.000063},   {0.32, 2.000371},   {0.33, 2.000939},   {0.34, 2.001771},
        {0.35, 2.002870},   {0.40, 2.012175},   {0.45, 2.027102},   {0.50, 2.046681},   {0.5302, 2.060396},
        {0.55, 2.070063},   {0.60, 2.096571},   {0.65, 2.125676},   {0.70, 2.156959},   {0.75, 2.190087},
        {0.80, 2.224790},   {0.85, 2.260830},   {0.90, 2.298048},   {0.95, 2.336306},   {1.00, 2.375477},
        {1.10, 2.456151},   {1.20, 2.539392},   {1.30, 2.624703},   {1.40, 2.711707},   {1.50, 2.800116},
        {1.75, 3.025906},   {2.00, 3.256689},   {2.50, 3.727808},   {3.00, 4.207372},   {4.00, 5.180715},
        {5.00, 6.166736},
    };
    return t;
}

inline std::optional<double> lookup(const std::vector<std::pair<double, double>>& table, double k) {
    for (const auto& [kk, nu] : table)
        if (std::abs(kk - k) < 1e-9) return nu;
    return std::nullopt;
}

inline constexpr double kAlpha = 0.31389;
inline constexpr double kAlphaSecondPower = 0.30298;
inline constexpr double kMu = 0.5286;
inline constexpr double kOmega = 2.372927;

}  // namespace cwlaser::reference
