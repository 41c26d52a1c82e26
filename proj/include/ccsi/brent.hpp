#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace ccsi {

template <typename Scalar>
struct Bracket {
    Scalar a, b, c;     // a < b < c (or reversed), f(b) <= f(a), f(b) <= f(c)
    Scalar fa, fb, fc;
    int evaluations = 0;
    bool found = false;
};

/// Brackets a minimum of f along x >= 0 or x <= 0 from the origin, starting with trial step
/// `step` and doubling. Gives up after `max_evaluations`.
template <typename Scalar, typename F>
Bracket<Scalar> bracket_minimum(F&& f, Scalar f0, Scalar step, int max_evaluations) {
    Bracket<Scalar> br{};
    const Scalar fp = f(step);
    const Scalar fm = f(-step);
    br.evaluations = 2;
    if (fp >= f0 && fm >= f0) {
        br = {-step, Scalar(0), step, fm, f0, fp, 2, true};
        return br;
    }
    const Scalar dir = fp <= fm ? Scalar(1) : Scalar(-1);
    Scalar x_prev = 0, f_prev = f0;
    Scalar x = dir * step, fx = dir > 0 ? fp : fm;
    while (br.evaluations < max_evaluations) {
        const Scalar x_next = 2 * x;
        const Scalar f_next = f(x_next);
        ++br.evaluations;
        if (!std::isfinite(f_next)) break;
        if (f_next > fx) {
            br.a = x_prev;
            br.fa = f_prev;
            br.b = x;
            br.fb = fx;
            br.c = x_next;
            br.fc = f_next;
            br.found = true;
            return br;
        }
        x_prev = x;
        f_prev = fx;
        x = x_next;
        fx = f_next;
    }
    return br;
}

template <typename Scalar>
struct LineMinimum {
    Scalar x;
    Scalar fx;
    int evaluations = 0;
    bool converged = false;
};

/// Brent's parabolic/golden-section minimizer inside a bracket. Stops when the bracket
/// shrinks below rel_tol * |x| + abs_tol or after `max_evaluations`.
template <typename Scalar, typename F>
LineMinimum<Scalar> brent_minimize(F&& f, const Bracket<Scalar>& br, Scalar rel_tol, int max_evaluations,
                                   Scalar abs_tol = Scalar(1e-300)) {
    constexpr Scalar golden = Scalar(0.3819660112501051);
    Scalar a = std::min(br.a, br.c), b = std::max(br.a, br.c);
    Scalar x = br.b, w = br.b, v = br.b;
    Scalar fx = br.fb, fw = br.fb, fv = br.fb;
    Scalar d = 0, e = 0;
    LineMinimum<Scalar> out{x, fx, 0, false};
    while (out.evaluations < max_evaluations) {
        const Scalar xm = Scalar(0.5) * (a + b);
        const Scalar tol1 = rel_tol * std::abs(x) + abs_tol;
        const Scalar tol2 = 2 * tol1;
        if (std::abs(x - xm) <= tol2 - Scalar(0.5) * (b - a)) {
            out.converged = true;
            break;
        }
        bool golden_step = true;
        if (std::abs(e) > tol1) {
            const Scalar r = (x - w) * (fx - fv);
            Scalar q = (x - v) * (fx - fw);
            Scalar p = (x - v) * q - (x - w) * r;
            q = 2 * (q - r);
            if (q > 0) p = -p;
            q = std::abs(q);
            const Scalar e_old = e;
            if (std::abs(p) < std::abs(Scalar(0.5) * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
                e = d;
                d = p / q;
                const Scalar u = x + d;
                if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
                golden_step = false;
            }
        }
        if (golden_step) {
            e = x >= xm ? a - x : b - x;
            d = golden * e;
        }
        const Scalar u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
        const Scalar fu = f(u);
        ++out.evaluations;
        if (fu <= fx) {
            (u >= x ? a : b) = x;
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            (u < x ? a : b) = u;
            if (fu <= fw || w == x) {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u;
                fv = fu;
            }
        }
    }
    out.x = x;
    out.fx = fx;
    return out;
}

}  // namespace ccsi
