#include "refref/losses.hpp"

#include <stdexcept>

namespace refref {

double photometric_loss(const Vec3& rendered, const Vec3& target) {
    Vec3 d = rendered - target;
    return dot(d, d) / 3.0;
}

Vec3 photometric_loss_gradient(const Vec3& rendered, const Vec3& target) {
    return (rendered - target) * (2.0 / 3.0);
}

namespace {

void check_sizes(const SampleSet& samples, const std::vector<double>& weights) {
    if (weights.size() != static_cast<size_t>(samples.size()))
        throw std::runtime_error("distortion_loss: weights/samples size mismatch");
}

}  // namespace

double distortion_loss(const SampleSet& samples, const std::vector<double>& weights,
                       bool corrected) {
    check_sizes(samples, weights);
    int n = samples.size();

    // Interval midpoints and widths in normalized distance. Samples are
    // ascending, so included midpoints stay ascending and the pairwise sum
    // telescopes into prefix sums.
    double pairwise = 0, self = 0;
    double w_prefix = 0, wm_prefix = 0;
    double span = samples.t_far - samples.t_near;
    for (int i = 0; i < n; ++i) {
        if (corrected && samples.inside[i]) continue;
        double ds = samples.dt[i] / span;
        double m = (0.5 * (samples.edge[i] + samples.edge[i + 1]) - samples.t_near) / span;
        double w = weights[i];
        // sum_{j<i} w_i w_j (m_i - m_j), doubled for the symmetric pair.
        pairwise += 2.0 * w * (m * w_prefix - wm_prefix);
        self += w * w * ds / 3.0;
        w_prefix += w;
        wm_prefix += w * m;
    }
    return pairwise + self;
}

std::vector<double> distortion_loss_gradient(const SampleSet& samples,
                                             const std::vector<double>& weights,
                                             bool corrected) {
    check_sizes(samples, weights);
    int n = samples.size();
    std::vector<double> grad(n, 0.0);

    // dL/dw_i = 2 sum_j w_j |m_i - m_j| + (2/3) w_i ds_i, over included j.
    double span = samples.t_far - samples.t_near;
    auto midpoint = [&](int i) {
        return (0.5 * (samples.edge[i] + samples.edge[i + 1]) - samples.t_near) / span;
    };
    double w_total = 0, wm_total = 0;
    for (int i = 0; i < n; ++i) {
        if (corrected && samples.inside[i]) continue;
        w_total += weights[i];
        wm_total += weights[i] * midpoint(i);
    }
    double w_prefix = 0, wm_prefix = 0;
    for (int i = 0; i < n; ++i) {
        if (corrected && samples.inside[i]) continue;
        double m = midpoint(i);
        double w = weights[i];
        // Split |m_i - m_j| at j = i using ascending midpoints.
        double below = m * w_prefix - wm_prefix;
        double above = (wm_total - wm_prefix - w * m) - m * (w_total - w_prefix - w);
        grad[i] = 2.0 * (below + above) + (2.0 / 3.0) * w * (samples.dt[i] / span);
        w_prefix += w;
        wm_prefix += w * m;
    }
    return grad;
}

}  // namespace refref
