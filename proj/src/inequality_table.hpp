#pragma once

// Generated by tests/oracles/inequality_table.py (mpmath, 50 digits). Do not edit.

namespace epcag::oracle {

struct InequalityRow {
    double mu, l, K, sigma, alpha, theta, L, eps;
    double bw_lhs, bw_rhs;
    double iterate_lhs, iterate_rhs;
    double contraction_lhs, contraction_rhs;
    double c6_lhs;
    double cone_lhs;
};

inline constexpr InequalityRow kInequalityRows[] = {
    {1, 0.01, 1, 1, 0.5, 1, 0.05, 1, 1.0386874771465135e-1, 3.6787944117144232e-1, 9.9154182092241206e-1, 1.0000000000000000, 5.0000000000000000e-2, 6.7235355342498780e-2, 1.0000000000000000e-1, 2.6487212707001281e-1},
    {1, 0.2, 1, 1, 0.5, 1, 0.1, 1, 3.5979245286058750, 3.6787944117144232e-1, 1.9830836418448241, 1.0000000000000000, 1.0000000000000000e-1, 6.7235355342498780e-2, 2.0000000000000000e-1, 5.2974425414002563e-1},
    {2, 0, 1, 1, 0.5, 1, 0, 1, 0.0, 1.3533528323661269e-1, 0.0, 1.0000000000000000, 0.0, 6.7235355342498780e-2, 0.0, 0.0},
    {2, 0.01, 1, 1, 0.5, 1, 0.02, 1, 6.6762134130868728e-1, 1.3533528323661269e-1, 3.9661672836896483e-1, 1.0000000000000000, 2.0000000000000000e-2, 6.7235355342498780e-2, 4.0000000000000000e-2, 1.0594885082800513e-1},
    {2, 0.03, 2, 2, 0.5, 1, 0.001, 0.5, 2.3274235564042977, 1.3533528323661269e-1, 4.4741632527630135e-2, 5.0000000000000000e-1, 1.0000000000000000e-3, 4.4701095758294083e-2, 2.0000000000000000e-3, 2.6487212707001281e-2},
    {3, 0.03, 2, 0.5, 0.05, 1, 0.2, 0.5, 2.3375370008288759e+1, 4.9787068367863943e-2, 1.0701904124040922e+1, 5.0000000000000000e-1, 2.0000000000000000e-1, 4.2473325239791361e-2, 1.6000000000000000, 4.1025421927520481},
    {1, 0.03, 1.5, 0.5, 0.05, 0.25, 0.005, 1, 2.2208894634070694e-2, 7.7880078307140487e-1, 1.6160215553536563e-1, 1.0000000000000000, 5.0000000000000000e-3, 7.0318593993936561e-2, 3.0000000000000000e-2, 4.9056599756302963e-2},
    {1, 0.1, 2, 4, 3.0, 1, 0.05, 0.5, 1.3385105813817685, 3.6787944117144232e-1, 1.5885185723755497e+1, 5.0000000000000000e-1, 5.0000000000000000e-2, 4.4965524905228895e-3, 5.0000000000000000e-2, 1.0542768461593834e+1},
    {2, 0.1, 1, 2, 1.0, 0.5, 0.005, 1, 5.8031507055057751e-1, 3.6787944117144232e-1, 4.9577091046120603e-2, 1.0000000000000000, 5.0000000000000000e-3, 1.3447071068499756e-1, 5.0000000000000000e-3, 2.6487212707001281e-2},
    {3, 0.001, 1.5, 4, 0.4, 1, 0.2, 1, 4.3211095312469460e-1, 4.9787068367863943e-2, 2.1059905315584939e+1, 1.0000000000000000, 2.0000000000000000e-1, 2.1583451954509870e-2, 1.5000000000000000e-1, 2.4295290802002386},
    {3, 0.03, 2, 0.5, 0.375, 0.25, 0.001, 2, 5.0284242191940308e-2, 4.7236655274101471e-1, 1.5602457256717358e-1, 2.0000000000000000, 1.0000000000000000e-3, 1.4649707082070117e-2, 8.0000000000000000e-3, 2.0982851403078258e-2},
    {2, 0.01, 1.5, 0.5, 0.25, 0.25, 0.02, 1.5, 1.0962635543318809e-2, 6.0653065971263342e-1, 1.0239112574720766, 1.5000000000000000, 2.0000000000000000e-2, 3.9065885552186979e-2, 1.2000000000000000e-1, 2.0128820974449129e-1},
    {2, 0.03, 1, 1, 0.25, 2, 0.001, 1, 5.0210775134500646e+3, 1.8315638888734180e-2, 3.5793306022104108e-2, 1.0000000000000000, 1.0000000000000000e-3, 4.4701095758294083e-2, 2.0000000000000000e-3, 5.2974425414002563e-3},
    {2, 0.001, 1.5, 0.5, 0.25, 2, 0.02, 1.5, 6.7723053791089390, 1.8315638888734180e-2, 1.7847752776603417, 1.5000000000000000, 2.0000000000000000e-2, 2.2411785114166260e-2, 1.2000000000000000e-1, 2.5825032389326249e-1},
    {2, 0.03, 1.5, 0.5, 0.125, 2, 0.05, 1, 5.0210775134500646e+3, 1.8315638888734180e-2, 2.9746254627672362, 1.0000000000000000, 5.0000000000000000e-2, 3.3617677671249390e-2, 3.0000000000000000e-1, 5.5673119531763699e-1},
    {1, 0.01, 1, 0.5, 0.25, 2, 0.2, 1, 1.4389665641849543, 1.3533528323661269e-1, 7.9323345673792965, 1.0000000000000000, 2.0000000000000000e-1, 3.3617677671249390e-2, 8.0000000000000000e-1, 1.0594885082800513},
    {2, 0.4, 3.25, 1, 0.25, 0.25, 0.2, 0.5, 5.1747855252262505e-1, 6.0653065971263342e-1, 1.1876932166776256e+1, 5.0000000000000000e-1, 2.0000000000000000e-1, 5.0518096051638680e-2, 1.3000000000000000, 1.5515966167804537e+1},
    {3, 0.03, 3.25, 2, 0.2, 2, 0.001, 3.25, 3.3682539656372694e+14, 2.4787521766663584e-3, 1.1863746661112849, 3.2500000000000000, 1.0000000000000000e-3, 4.9807966048868930e-3, 3.2500000000000000e-3, 9.3638099966050861e-2},
    {1, 0.01, 2, 0.5, 0.25, 0.5, 0.02, 0.5, 2.2016040382473358e-2, 6.0653065971263342e-1, 1.2181468889001288, 5.0000000000000000e-1, 2.0000000000000000e-2, 2.7363968694637618e-2, 1.6000000000000000e-1, 4.2662969061336526e-1},
    {2, 0.1, 3.25, 0.5, 0.25, 1, 0.001, 3.25, 1.3312899407674473e+1, 1.3533528323661269e-1, 2.9842259649888110e-1, 3.2500000000000000, 1.0000000000000000e-3, 1.4520794953774824e-2, 1.3000000000000000e-2, 8.5829392611469035e-2},
};

}  // namespace epcag::oracle
