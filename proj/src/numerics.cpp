#include "urnflow/numerics.hpp"

#include <algorithm>
#include <vector>

namespace urnflow {
namespace {

// Gauss-Kronrod 15-point nodes/weights on [-1,1]; the embedded 7-point Gauss
// rule uses the odd-indexed nodes. Values from the standard QUADPACK tables.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);
    double kronrod = kWgk[7] * fv[7];
    double gauss = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kronrod += kWgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1)
            gauss += kWg[i / 2] * (fv[i] + fv[14 - i]);
    }
    kronrod *= h;
    gauss *= h;
    double err = std::abs(kronrod - gauss);
    // QUADPACK-style sharpening of the raw discrepancy.
    err = std::pow(200.0 * err, 1.5);
    if (err > std::abs(kronrod) || !std::isfinite(err)) err = std::abs(kronrod - gauss);
    return {a, b, kronrod, std::max(err, std::abs(kronrod - gauss))};
}

}  // namespace

QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        double tol_abs, double tol_rel, int max_panels) {
    QuadResult out;
    if (!(b > a)) {
        out.converged = true;
        return out;
    }
    std::vector<Panel> panels;
    panels.push_back(eval_panel(f, a, b));
    out.evaluations = 15;
    for (int iter = 0; iter < max_panels; ++iter) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].value;
            err += panels[i].error;
            if (panels[i].error > panels[worst].error) worst = i;
        }
        if (err <= tol_abs + tol_rel * std::abs(total)) {
            out.value = total;
            out.error = err;
            out.converged = true;
            return out;
        }
        Panel p = panels[worst];
        double mid = 0.5 * (p.a + p.b);
        panels[worst] = eval_panel(f, p.a, mid);
        panels.push_back(eval_panel(f, mid, p.b));
        out.evaluations += 30;
    }
    double total = 0.0, err = 0.0;
    for (const Panel& p : panels) {
        total += p.value;
        err += p.error;
    }
    out.value = total;
    out.error = err;
    out.converged = false;
    return out;
}

MomentStats sample_moments(const double* data, std::size_t n) {
    MomentStats s;
    s.count = n;
    if (n == 0) return s;
    NeumaierSum acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(data[i]);
    s.mean = acc.value() / static_cast<double>(n);
    NeumaierSum m2, m3, m4;
    for (std::size_t i = 0; i < n; ++i) {
        double d = data[i] - s.mean;
        double d2 = d * d;
        m2.add(d2);
        m3.add(d2 * d);
        m4.add(d2 * d2);
    }
    double nn = static_cast<double>(n);
    double mu2 = m2.value() / nn;
    double mu3 = m3.value() / nn;
    double mu4 = m4.value() / nn;
    s.variance = (n > 1) ? m2.value() / (nn - 1.0) : 0.0;
    if (mu2 > 0.0) {
        s.skewness = mu3 / std::pow(mu2, 1.5);
        s.excess_kurtosis = mu4 / (mu2 * mu2) - 3.0;
    }
    return s;
}

}  // namespace urnflow
