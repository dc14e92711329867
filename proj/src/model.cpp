/*
 Copyright 2026 The greybox Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "greybox/model.hpp"

namespace greybox {

LtiSystem::LtiSystem(Matrix A, Matrix B_u, Matrix S_eta, Matrix B_omega, Matrix C, Matrix D_nu)
    : A_(std::move(A)),
      B_u_(std::move(B_u)),
      S_eta_(std::move(S_eta)),
      B_omega_(std::move(B_omega)),
      C_(std::move(C)),
      D_nu_(std::move(D_nu)) {
    const auto n = A_.rows();
    if (n < 1 || A_.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "A must be square with n >= 1, got " + shape_str(A_));
    }
    require_shape(B_u_.rows() == n, "B_u rows vs A", B_u_, A_);
    require_shape(S_eta_.rows() == n, "S_eta rows vs A", S_eta_, A_);
    require_shape(B_omega_.rows() == n, "B_omega rows vs A", B_omega_, A_);
    require_shape(C_.cols() == n, "C cols vs A", C_, A_);
    if (C_.rows() < 1) {
        throw Error(ErrorKind::DimensionMismatch, "C must have at least one output row");
    }
    require_shape(D_nu_.rows() == C_.rows(), "D_nu rows vs C", D_nu_, C_);
    for (const Matrix* m : {&A_, &B_u_, &S_eta_, &B_omega_, &C_, &D_nu_}) {
        if (!m->allFinite()) {
            throw Error(ErrorKind::InvalidArgument, "plant matrices must be finite");
        }
    }
    dims_ = Dims{static_cast<int>(n),
                 static_cast<int>(C_.rows()),
                 static_cast<int>(B_u_.cols()),
                 static_cast<int>(S_eta_.cols()),
                 static_cast<int>(B_omega_.cols()),
                 static_cast<int>(D_nu_.cols())};
}

bool LtiSystem::uncertainty_map_full_rank() const {
    if (S_eta_.cols() == 0) return true;
    Eigen::ColPivHouseholderQR<Matrix> qr(S_eta_);
    return qr.rank() == S_eta_.cols();
}

void TrueUncertainty::check_against(const LtiSystem& sys) const {
    const auto& d = sys.dims();
    if (Theta_a.rows() != d.n_eta || Theta_a.cols() != d.n) {
        throw Error(ErrorKind::DimensionMismatch,
                    "Theta_a must be " + std::to_string(d.n_eta) + "x" + std::to_string(d.n) +
                        ", got " + shape_str(Theta_a));
    }
    if (B_a.rows() != d.n_eta || B_a.cols() != d.l) {
        throw Error(ErrorKind::DimensionMismatch,
                    "B_a must be " + std::to_string(d.n_eta) + "x" + std::to_string(d.l) +
                        ", got " + shape_str(B_a));
    }
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::CostModified: return "cost-modified";
        case Provenance::ConstraintModified: return "constraint-modified";
        case Provenance::LeastSquares: return "least-squares";
    }
    return "unknown";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "cost-modified") return Provenance::CostModified;
    if (s == "constraint-modified") return Provenance::ConstraintModified;
    if (s == "least-squares") return Provenance::LeastSquares;
    throw Error(ErrorKind::InvalidArgument, "unknown provenance tag '" + s + "'");
}

LtiSystem extended_model(const LtiSystem& sys, const UncertaintyModel& um) {
    const auto& d = sys.dims();
    require_shape(um.S_eta_l.rows() == d.n, "S_eta_l rows vs A", um.S_eta_l, sys.A());
    require_shape(um.Theta_l.cols() == d.n, "Theta_l cols vs A", um.Theta_l, sys.A());
    require_shape(um.Theta_l.rows() == um.S_eta_l.cols(), "Theta_l rows vs S_eta_l cols", um.Theta_l,
                  um.S_eta_l);
    require_shape(um.B_l.rows() == um.S_eta_l.cols(), "B_l rows vs S_eta_l cols", um.B_l, um.S_eta_l);
    require_shape(um.B_l.cols() == d.l, "B_l cols vs B_u cols", um.B_l, sys.B_u());

    Matrix A_ext = sys.A() + um.S_eta_l * um.Theta_l;
    Matrix B_ext = sys.B_u() + um.S_eta_l * um.B_l;
    return LtiSystem(std::move(A_ext), std::move(B_ext), Matrix::Zero(d.n, 0), sys.B_omega(), sys.C(),
                     sys.D_nu());
}

AugmentedSystem augment(const LtiSystem& sys, int r) {
    if (r < 1) {
        throw Error(ErrorKind::InvalidArgument,
                    "augmentation order r must be >= 1 (the chain must at least carry eta itself)");
    }
    const auto& d = sys.dims();
    const int n = d.n;
    const int ne = d.n_eta;
    const int na = n + r * ne;
    const int dn = (r - 1) * ne;

    AugmentedSystem aug;
    aug.r = r;
    aug.n_a = na;
    aug.dims = d;
    aug.D_nu = sys.D_nu();

    aug.A_a = Matrix::Zero(na, na);
    aug.A_a.topLeftCorner(n, n) = sys.A();
    aug.A_a.block(0, n, n, ne) = sys.S_eta();
    if (dn > 0) aug.A_a.block(n, n + ne, dn, dn) = Matrix::Identity(dn, dn);

    aug.B_ua = Matrix::Zero(na, d.l);
    aug.B_ua.topRows(n) = sys.B_u();

    aug.B_omega_a = Matrix::Zero(na, d.n_omega + ne);
    aug.B_omega_a.topLeftCorner(n, d.n_omega) = sys.B_omega();
    aug.B_omega_a.bottomRightCorner(ne, ne) = Matrix::Identity(ne, ne);

    aug.C_a = Matrix::Zero(d.m, na);
    aug.C_a.leftCols(n) = sys.C();

    aug.C_bar_1 = Matrix::Zero(ne, na);
    aug.C_bar_1.block(0, n, ne, ne) = Matrix::Identity(ne, ne);
    aug.C_bar_2 = Matrix::Zero(n, na);
    aug.C_bar_2.leftCols(n) = Matrix::Identity(n, n);
    aug.C_bar_a.resize(ne + n, na);
    aug.C_bar_a << aug.C_bar_1, aug.C_bar_2;
    return aug;
}

}  // namespace greybox
