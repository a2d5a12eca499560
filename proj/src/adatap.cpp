#include "taprbm/adatap.hpp"

#include <Eigen/LU>
#include <cmath>

#include "taprbm/errors.hpp"
#include "taprbm/units.hpp"

namespace taprbm {

JointModel build_joint(const GrbmModel& m) {
    validate(m);
    for (const auto& p : m.vis) {
        if (family_of(p) != UnitFamily::Binary) {
            throw InputError("build_joint requires binary visible units");
        }
    }
    for (const auto& p : m.hid) {
        if (family_of(p) != UnitFamily::Binary) {
            throw InputError("build_joint requires binary hidden units");
        }
    }
    const Eigen::Index nv = m.n_visible(), nh = m.n_hidden();
    JointModel jm;
    jm.j = Matrix::Zero(nv + nh, nv + nh);
    jm.j.topRightCorner(nv, nh) = m.w;
    jm.j.bottomLeftCorner(nh, nv) = m.w.transpose();
    jm.h.resize(nv + nh);
    for (Eigen::Index i = 0; i < nv; ++i) {
        jm.h(i) = std::get<BinaryParams>(m.vis[static_cast<std::size_t>(i)]).u;
    }
    for (Eigen::Index j = 0; j < nh; ++j) {
        jm.h(nv + j) = std::get<BinaryParams>(m.hid[static_cast<std::size_t>(j)]).u;
    }
    return jm;
}

AdaTapResult adatap_run(const JointModel& jm, const AdaTapSettings& settings) {
    const Eigen::Index n = jm.h.size();
    if (jm.j.rows() != n || jm.j.cols() != n) throw InputError("adatap_run: shape mismatch");
    if (!(settings.tolerance > 0.0)) throw InputError("adatap_run: tolerance must be positive");

    Vector a1(n), c1(n);
    Vector big_a1 = Vector::Zero(n);
    Vector big_b1 = jm.h;
    auto prior_mean = [&](Eigen::Index i) { return sigmoid(big_b1(i) - 0.5 * big_a1(i)); };
    for (Eigen::Index i = 0; i < n; ++i) a1(i) = prior_mean(i);

    AdaTapResult out;
    Vector big_a2_prev;
    for (int it = 1; it <= settings.max_iters; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            c1(i) = std::max(a1(i) * (1.0 - a1(i)), 1e-12);
        }
        Vector big_a2 = c1.cwiseInverse() - big_a1;
        const Vector big_b2 = a1.cwiseQuotient(c1) - big_b1;

        // C2 = (diag(A2) - J)^{-1}; damped retries blend A2 back toward the
        // last accepted value when the system turns singular.
        Matrix c2;
        Vector c2_diag;
        bool ok = false;
        for (int attempt = 0; attempt <= settings.max_retries; ++attempt) {
            Matrix sys = -jm.j;
            sys.diagonal() += big_a2;
            Eigen::PartialPivLU<Matrix> lu(sys);
            c2 = lu.inverse();
            c2_diag = c2.diagonal();
            if (c2.allFinite() && (c2_diag.array() > 1e-14).all()) {
                ok = true;
                break;
            }
            if (big_a2_prev.size() == 0) {
                big_a2.array() += std::pow(2.0, attempt);  // strengthen the diagonal
            } else {
                big_a2 = 0.5 * (big_a2 + big_a2_prev);
            }
        }
        if (!ok) {
            throw NumericalError("adatap_run: diag(A2) - J stayed singular after retries", 0.0,
                                 0.0);
        }
        big_a2_prev = big_a2;

        const Vector a2 = c2 * (big_b2 + jm.h);
        const Vector big_a1_new = c2_diag.cwiseInverse() - big_a2;
        const Vector big_b1_new = a2.cwiseQuotient(c2_diag) - big_b2;
        big_a1 = (1.0 - settings.damping) * big_a1_new + settings.damping * big_a1;
        big_b1 = (1.0 - settings.damping) * big_b1_new + settings.damping * big_b1;

        double sq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double a_new = prior_mean(i);
            const double d = a_new - a1(i);
            sq += d * d;
            a1(i) = a_new;
        }
        out.residual = sq / static_cast<double>(n);
        out.iterations = it;
        if (out.residual <= settings.tolerance) {
            out.converged = true;
            break;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) c1(i) = a1(i) * (1.0 - a1(i));
    out.a = a1;
    out.c = c1;
    return out;
}

}  // namespace taprbm
