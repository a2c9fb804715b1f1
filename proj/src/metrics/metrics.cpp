#include "vton/metrics/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace vton::metrics {

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<size_t>(size));
    double sum = 0;
    int half = size / 2;
    for (int i = 0; i < size; ++i) {
        double d = i - half;
        w[static_cast<size_t>(i)] = std::exp(-d * d / (2 * sigma * sigma));
        sum += w[static_cast<size_t>(i)];
    }
    for (double& v : w) v /= sum;
    return w;
}

// separable valid-mode Gaussian filtering of one channel plane
std::vector<double> filter_valid(const Tensor& img, int c, const std::vector<double>& w, int& Ho,
                                 int& Wo) {
    int H = img.dim(1), W = img.dim(2);
    int k = static_cast<int>(w.size());
    Wo = W - k + 1;
    Ho = H - k + 1;
    std::vector<double> rows(static_cast<size_t>(H) * Wo);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < Wo; ++x) {
            double s = 0;
            for (int i = 0; i < k; ++i) s += w[static_cast<size_t>(i)] * img.at(c, y, x + i);
            rows[static_cast<size_t>(y) * Wo + x] = s;
        }
    std::vector<double> out(static_cast<size_t>(Ho) * Wo);
    for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < Wo; ++x) {
            double s = 0;
            for (int i = 0; i < k; ++i) s += w[static_cast<size_t>(i)] * rows[static_cast<size_t>(y + i) * Wo + x];
            out[static_cast<size_t>(y) * Wo + x] = s;
        }
    return out;
}

}  // namespace

double ssim(const Tensor& x, const Tensor& y) {
    check_same_shape(x, y, "ssim");
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;  // L = 1
    const int win = 11;
    if (x.dim(1) < win || x.dim(2) < win) throw ShapeError("ssim: image smaller than the 11x11 window");
    std::vector<double> w = gaussian_window(win, 1.5);

    // per-channel products filtered with the same window
    double total = 0;
    int C = x.dim(0);
    for (int c = 0; c < C; ++c) {
        int Ho = 0, Wo = 0;
        Tensor xx({1, x.dim(1), x.dim(2)}), yy({1, x.dim(1), x.dim(2)}), xy({1, x.dim(1), x.dim(2)});
        for (int yi = 0; yi < x.dim(1); ++yi)
            for (int xi = 0; xi < x.dim(2); ++xi) {
                double a = x.at(c, yi, xi), b = y.at(c, yi, xi);
                xx.at(0, yi, xi) = static_cast<float>(a * a);
                yy.at(0, yi, xi) = static_cast<float>(b * b);
                xy.at(0, yi, xi) = static_cast<float>(a * b);
            }
        std::vector<double> mx = filter_valid(x, c, w, Ho, Wo);
        std::vector<double> my = filter_valid(y, c, w, Ho, Wo);
        std::vector<double> mxx = filter_valid(xx, 0, w, Ho, Wo);
        std::vector<double> myy = filter_valid(yy, 0, w, Ho, Wo);
        std::vector<double> mxy = filter_valid(xy, 0, w, Ho, Wo);
        double acc = 0;
        for (size_t i = 0; i < mx.size(); ++i) {
            double mu_x = mx[i], mu_y = my[i];
            double var_x = mxx[i] - mu_x * mu_x;
            double var_y = myy[i] - mu_y * mu_y;
            double cov = mxy[i] - mu_x * mu_y;
            double v = ((2 * mu_x * mu_y + C1) * (2 * cov + C2)) /
                       ((mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2));
            acc += v;
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / C;
}

double masked_l1(const Tensor& x, const Tensor& y, const Tensor& mask) {
    check_same_shape(x, y, "masked_l1");
    if (mask.dim(0) != 1 || mask.dim(1) != x.dim(1) || mask.dim(2) != x.dim(2))
        throw ShapeError("masked_l1: mask shape");
    int64_t hw = static_cast<int64_t>(x.dim(1)) * x.dim(2);
    int64_t area = 0;
    for (int64_t i = 0; i < hw; ++i) area += mask[i] > 0.5f;
    if (area == 0) throw ArgError("masked_l1: empty mask");
    double s = 0;
    for (int c = 0; c < x.dim(0); ++c)
        for (int64_t i = 0; i < hw; ++i)
            if (mask[i] > 0.5f) s += std::abs(static_cast<double>(x[c * hw + i]) - y[c * hw + i]);
    return s / (static_cast<double>(area) * x.dim(0));
}

double frechet_proxy(const std::vector<std::vector<float>>& a, const std::vector<std::vector<float>>& b,
                     double eps) {
    if (a.size() < 2 || b.size() < 2) throw ArgError("frechet_proxy: need at least 2 samples per set");
    size_t d = a[0].size();
    for (const auto& v : a)
        if (v.size() != d) throw ShapeError("frechet_proxy: ragged features");
    for (const auto& v : b)
        if (v.size() != d) throw ShapeError("frechet_proxy: ragged features");

    auto moments = [&](const std::vector<std::vector<float>>& s, Eigen::VectorXd& mu,
                       Eigen::MatrixXd& cov) {
        int n = static_cast<int>(s.size());
        int dim = static_cast<int>(d);
        Eigen::MatrixXd X(n, dim);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < dim; ++j) X(i, j) = s[static_cast<size_t>(i)][static_cast<size_t>(j)];
        mu = X.colwise().mean();
        Eigen::MatrixXd cent = X.rowwise() - mu.transpose();
        cov = cent.transpose() * cent / std::max(1, n - 1);
        cov += eps * Eigen::MatrixXd::Identity(dim, dim);
    };
    Eigen::VectorXd mu_a, mu_b;
    Eigen::MatrixXd ca, cb;
    moments(a, mu_a, ca);
    moments(b, mu_b, cb);

    // tr((ca cb)^{1/2}) via the symmetrized product sqrt(ca) cb sqrt(ca)
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(ca);
    Eigen::VectorXd ev = es_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd sqrt_a = es_a.eigenvectors() * ev.asDiagonal() * es_a.eigenvectors().transpose();
    Eigen::MatrixXd prod = sqrt_a * cb * sqrt_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_p((prod + prod.transpose()) * 0.5);
    double tr_sqrt = es_p.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    double dist = (mu_a - mu_b).squaredNorm() + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
    return dist;
}

std::vector<float> pooled_features(const latent::Autoencoder& ae, const Tensor& img) {
    std::vector<Tensor> feats = latent::perceptual_features(ae, img);
    std::vector<float> out;
    for (const Tensor& f : feats) {
        int64_t hw = static_cast<int64_t>(f.dim(1)) * f.dim(2);
        for (int c = 0; c < f.dim(0); ++c) {
            double s = 0;
            for (int64_t i = 0; i < hw; ++i) s += f[c * hw + i];
            out.push_back(static_cast<float>(s / static_cast<double>(hw)));
        }
    }
    return out;
}

double flat_consistency(const Tensor& tryon, const Tensor& m_C, const flow::FlowNetwork& flatten,
                        const Tensor& garment, const Tensor& m_cp) {
    if (!flatten.trained) throw DependencyError("flat_consistency: flatten checkpoint not trained");
    Graph g;
    Var parsed = g.leaf(flow::take_off(tryon, m_C));
    flow::FlattenForward f =
        flow::flatten_network_forward(flatten, g, parsed, flow::downsize_mask_levels(m_cp), false);
    return masked_l1(f.flattened.val(), garment, m_cp);
}

}  // namespace vton::metrics
