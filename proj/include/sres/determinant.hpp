#pragma once

#include "sres/common.hpp"
#include "sres/quantize.hpp"

#include <string>
#include <vector>

namespace sres {

struct DetSample {
    cplx z;
    double logabs = 0.0;         // ln |det(Anum - z) / det(Aden - z)|
    double arg_increment = 0.0;  // against the previous sample on the contour
};

// log det(A - z) from a pivoted LU, with the permutation sign folded into the
// imaginary part.  Throws SingularDenominator when a pivot falls below
// 1e-14 times the matrix scale.
cplx logdet_shifted(const CMat& A, cplx z);

// (log det(Anum - z)) - (log det(Aden - z)); imaginary part modulo 2 pi
cplx rel_logdet(const OperatorMatrix& Anum, const OperatorMatrix& Aden, cplx z);
cplx rel_logdet(const CMat& Anum, const CMat& Aden, cplx z);

// Reduces A once to upper Hessenberg form so that log det(A - z) costs O(n^2)
// per z instead of O(n^3).
class HessenbergDet {
public:
    explicit HessenbergDet(const CMat& A);
    cplx logdet(cplx z) const;  // same conventions as logdet_shifted
    Eigen::Index side() const { return n_; }

private:
    Eigen::Index n_ = 0;
    std::vector<cplx> rows_;  // Hessenberg matrix, row-major
    double scale_ = 1.0;
};

double trace_norm(const CMat& A);
// trace norm of X diag(d) X^*, through a thin QR of X
double trace_norm_lowrank(const CMat& X, const std::vector<double>& d);

struct Circle {
    cplx center = 0.0;
    double radius = 1.0;
};

struct WindingResult {
    long winding = 0;        // winding of det(Anum - z)/det(Aden - z)
    long winding_num = 0;    // zeros of det(Anum - z) inside
    long winding_den = 0;    // zeros of det(Aden - z) inside
    std::vector<DetSample> samples;
    int max_depth = 0;
};

// Argument principle on the circle: 64 equally spaced starting points, each
// interval bisected until both determinants change argument by less than
// pi/2.  RefinementCapExceeded when max_refine levels do not suffice.
WindingResult winding_count(const CMat& Anum, const CMat& Aden, const Circle& circle, int max_refine = 16);
WindingResult winding_count(const OperatorMatrix& Anum, const OperatorMatrix& Aden, const Circle& circle,
                            int max_refine = 16);

// eigenvalue count inside the circle, for comparison with the winding
long count_inside(const std::vector<cplx>& values, const Circle& circle);

void write_contour_csv(const std::string& path, const std::vector<DetSample>& samples);

}  // namespace sres
