#pragma once

// Rational-approximation constants shared by the scalar and SIMD normal-CDF
// kernels. The split is the classic erf/erfc domain decomposition for double
// precision: an odd rational for |x| < 1, and exp(-x^2) times a rational in x
// for the two complementary-function regimes.

#include <array>

namespace curvedress::kernels::coeffs {

inline constexpr double kSqrtHalf = 0.70710678118654752440;
inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kExpC1 = 6.93145751953125e-1;
inline constexpr double kExpC2 = 1.42860682030941723212e-6;

// exp(x): x*P(x^2) / (Q(x^2) - x*P(x^2)) form.
inline constexpr std::array<double, 3> kExpP = {
    1.26177193074810590878e-4,
    3.02994407707441961300e-2,
    9.99999999999999999910e-1,
};
inline constexpr std::array<double, 4> kExpQ = {
    3.00198505138664455042e-6,
    2.52448340349684104192e-3,
    2.27265548208155028766e-1,
    2.00000000000000000005e0,
};

// erf(x) = x * T(x^2) / U(x^2), |x| < 1 (U has an implicit leading 1).
inline constexpr std::array<double, 5> kErfT = {
    9.60497373987051638749e0,
    9.00260197203842689217e1,
    2.23200534594684319226e3,
    7.00332514112805075473e3,
    5.55923013010394962768e4,
};
inline constexpr std::array<double, 5> kErfU = {
    3.35617141647503099647e1,
    5.21357949780152679795e2,
    4.59432382970980127987e3,
    2.26290000613890934246e4,
    4.92673942608635921086e4,
};

// erfc(x) = exp(-x^2) * P(x) / Q(x), 1 <= x < 8 (Q implicit leading 1).
inline constexpr std::array<double, 9> kErfcP = {
    2.46196981473530512524e-10,
    5.64189564831068821977e-1,
    7.46321056442269912687e0,
    4.86371970985681366614e1,
    1.96520832956077098242e2,
    5.26445194995477358631e2,
    9.34528527171957607540e2,
    1.02755188689515710272e3,
    5.57535335369399327526e2,
};
inline constexpr std::array<double, 8> kErfcQ = {
    1.32281951154744992508e1,
    8.67072140885989742329e1,
    3.54937778887819891062e2,
    9.75708501743205489753e2,
    1.82390916687909736289e3,
    2.24633760818710981792e3,
    1.65666309194161350182e3,
    5.57535340817727675546e2,
};

// erfc(x) = exp(-x^2) * R(x) / S(x), x >= 8 (S implicit leading 1).
inline constexpr std::array<double, 6> kErfcR = {
    5.64189583547755073984e-1,
    1.27536670759978104416e0,
    5.01905042251180477414e0,
    6.16021097993053585195e0,
    7.40974269950448939160e0,
    2.97886665372100240670e0,
};
inline constexpr std::array<double, 6> kErfcS = {
    2.26052863220117276590e0,
    9.39603524938001434673e0,
    1.20489539808096656605e1,
    3.20031771211969039533e1,
    7.14233316108076809589e1,
    6.09183775981298564977e0,
};

// Beyond this |x| the complementary tail underflows our mass resolution;
// the kernel returns exactly 0/1. erfc(26) ~ 1e-295, still a normal double.
inline constexpr double kErfcCut = 26.0;
// Floor for the exp argument so lane junk can never reach the 2^n scaling
// with an out-of-range exponent.
inline constexpr double kExpArgFloor = -709.0;

// Per-decision hash increment for the sign-flip resampler.
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kSignBit = 0x8000000000000000ULL;

}  // namespace curvedress::kernels::coeffs
