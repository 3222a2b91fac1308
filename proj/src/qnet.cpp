#include "sfdqn/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sfdqn/binio.hpp"
#include "sfdqn/errors.hpp"
#include "sfdqn/rng.hpp"

namespace sfdqn {

namespace {

constexpr char kMagic[9] = {'S', 'F', 'D', 'Q', 'N', '-', 'C', 'K', '\0'};
constexpr std::uint16_t kVersion = 1;
constexpr double kGradientNormLimit = 1e6;

void check_finite(std::span<const double> values, const char* layer) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value in layer ") + layer);
        }
    }
}

void finalize_arch(NetworkArch& arch) {
    int h = arch.input_h;
    int w = arch.input_w;
    int ch = 1;
    for (std::size_t l = 0; l < arch.convs.size(); ++l) {
        ConvSpec& c = arch.convs[l];
        c.in_ch = ch;
        c.in_h = h;
        c.in_w = w;
        c.out_h = h - c.kernel + 1;
        c.out_w = w - c.kernel + 1;
        if (c.out_h < 1 || c.out_w < 1) {
            throw ShapeError("conv layer " + std::to_string(l + 1) + " output is empty (" +
                             std::to_string(c.out_h) + "x" + std::to_string(c.out_w) + ")");
        }
        if (c.pool_after) {
            c.pooled_h = c.out_h / 2;
            c.pooled_w = c.out_w / 2;
            if (c.pooled_h < 1 || c.pooled_w < 1) {
                throw ShapeError("pool after conv layer " + std::to_string(l + 1) +
                                 " output is empty");
            }
        } else {
            c.pooled_h = c.out_h;
            c.pooled_w = c.out_w;
        }
        h = c.pooled_h;
        w = c.pooled_w;
        ch = c.out_ch;
    }
    if (arch.joint_inputs < 1 || arch.joint_width < 1 || arch.merged_width < 1 ||
        arch.n_actions < 1) {
        throw ShapeError("dense widths and action count must be positive");
    }
}

void prepare_workspace(const NetworkArch& arch, Workspace& ws) {
    const std::size_t n_convs = arch.convs.size();
    ws.image_in.resize(static_cast<std::size_t>(arch.input_h) * arch.input_w);
    ws.joints_in.resize(arch.joint_inputs);
    ws.conv_z.resize(n_convs);
    ws.conv_a.resize(n_convs);
    ws.conv_p.resize(n_convs);
    ws.pool_idx.resize(n_convs);
    ws.d_pool.resize(n_convs);
    ws.g_conv_w.resize(n_convs);
    ws.g_conv_b.resize(n_convs);
    int max_out_volume = 0;
    for (std::size_t l = 0; l < n_convs; ++l) {
        const ConvSpec& c = arch.convs[l];
        ws.conv_z[l].resize(c.out_volume());
        ws.conv_a[l].resize(c.out_volume());
        ws.conv_p[l].resize(c.pool_after ? c.pooled_volume() : 0);
        ws.pool_idx[l].resize(c.pool_after ? c.pooled_volume() : 0);
        ws.d_pool[l].resize(c.pooled_volume());
        ws.g_conv_w[l].resize(static_cast<std::size_t>(c.out_ch) * c.in_ch * c.kernel * c.kernel);
        ws.g_conv_b[l].resize(c.out_ch);
        max_out_volume = std::max(max_out_volume, c.out_volume());
    }
    ws.joint_z.resize(arch.joint_width);
    ws.joint_a.resize(arch.joint_width);
    ws.merged_in.resize(arch.merged_inputs());
    ws.merged_z.resize(arch.merged_width);
    ws.merged_a.resize(arch.merged_width);
    ws.q.resize(arch.n_actions);
    ws.d_q.resize(arch.n_actions);
    ws.d_merged_z.resize(arch.merged_width);
    ws.d_merged_in.resize(arch.merged_inputs());
    ws.d_joint_z.resize(arch.joint_width);
    ws.d_act.resize(max_out_volume);
}

void conv_forward(const ConvLayer& layer, const double* in, double* z, double* a) {
    const ConvSpec& c = layer.spec;
    const int out_plane = c.out_h * c.out_w;
    const int in_plane = c.in_h * c.in_w;
    for (int oc = 0; oc < c.out_ch; ++oc) {
        double* zp = z + static_cast<std::size_t>(oc) * out_plane;
        std::fill(zp, zp + out_plane, layer.b[oc]);
        for (int ic = 0; ic < c.in_ch; ++ic) {
            const double* ip = in + static_cast<std::size_t>(ic) * in_plane;
            const double* wp =
                layer.w.data() +
                (static_cast<std::size_t>(oc) * c.in_ch + ic) * c.kernel * c.kernel;
            for (int ky = 0; ky < c.kernel; ++ky) {
                for (int kx = 0; kx < c.kernel; ++kx) {
                    const double wv = wp[ky * c.kernel + kx];
                    for (int oy = 0; oy < c.out_h; ++oy) {
                        const double* irow = ip + (oy + ky) * c.in_w + kx;
                        double* zrow = zp + oy * c.out_w;
                        for (int ox = 0; ox < c.out_w; ++ox) {
                            zrow[ox] += wv * irow[ox];
                        }
                    }
                }
            }
        }
    }
    const int volume = c.out_volume();
    for (int i = 0; i < volume; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void pool_forward(const ConvSpec& c, const double* a, double* p, int* idx) {
    const int out_plane = c.out_h * c.out_w;
    const int pooled_plane = c.pooled_h * c.pooled_w;
    for (int oc = 0; oc < c.out_ch; ++oc) {
        const double* ap = a + static_cast<std::size_t>(oc) * out_plane;
        double* pp = p + static_cast<std::size_t>(oc) * pooled_plane;
        int* xp = idx + static_cast<std::size_t>(oc) * pooled_plane;
        for (int py = 0; py < c.pooled_h; ++py) {
            for (int px = 0; px < c.pooled_w; ++px) {
                int best = (2 * py) * c.out_w + 2 * px;
                double best_v = ap[best];
                const int candidates[3] = {(2 * py) * c.out_w + 2 * px + 1,
                                           (2 * py + 1) * c.out_w + 2 * px,
                                           (2 * py + 1) * c.out_w + 2 * px + 1};
                for (int cand : candidates) {
                    if (ap[cand] > best_v) {
                        best_v = ap[cand];
                        best = cand;
                    }
                }
                pp[py * c.pooled_w + px] = best_v;
                xp[py * c.pooled_w + px] = oc * out_plane + best;
            }
        }
    }
}

void dense_forward(const DenseLayer& layer, const double* in, double* z) {
    for (int j = 0; j < layer.out_n; ++j) {
        const double* wrow = layer.w.data() + static_cast<std::size_t>(j) * layer.in_n;
        double sum = layer.b[j];
        for (int i = 0; i < layer.in_n; ++i) sum += wrow[i] * in[i];
        z[j] = sum;
    }
}

double dot(const double* a, const double* b, int n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double norm_sq(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return sum;
}

}  // namespace

NetworkArch NetworkArch::make(ArchVariant v) {
    NetworkArch arch;
    arch.variant = v;
    switch (v) {
        case ArchVariant::shallow:
            arch.convs = {ConvSpec{.out_ch = 8, .kernel = 4, .pool_after = true},
                          ConvSpec{.out_ch = 16, .kernel = 3, .pool_after = false}};
            break;
        case ArchVariant::deep: {
            std::vector<int> kernels = {4, 4, 4, 4, 4, 3, 3, 3, 3, 3};
            // Place a pool after every second conv when the remaining stack
            // still produces a positive feature map.
            int h = arch.input_h;
            int w = arch.input_w;
            for (std::size_t l = 0; l < kernels.size(); ++l) {
                ConvSpec c;
                c.out_ch = kernels[l] == 4 ? 8 : 16;
                c.kernel = kernels[l];
                h -= c.kernel - 1;
                w -= c.kernel - 1;
                if ((l + 1) % 2 == 0) {
                    int remaining = 0;
                    for (std::size_t m = l + 1; m < kernels.size(); ++m) remaining += kernels[m] - 1;
                    if (h / 2 - remaining >= 1 && w / 2 - remaining >= 1) {
                        c.pool_after = true;
                        h /= 2;
                        w /= 2;
                    }
                }
                arch.convs.push_back(c);
            }
            break;
        }
        case ArchVariant::custom:
            throw ShapeError("custom architectures must be built with NetworkArch::custom");
    }
    finalize_arch(arch);
    return arch;
}

NetworkArch NetworkArch::custom(int input_h, int input_w, const std::vector<ConvInit>& convs,
                                int joint_inputs, int joint_width, int merged_width,
                                int n_actions) {
    NetworkArch arch;
    arch.variant = ArchVariant::custom;
    arch.input_h = input_h;
    arch.input_w = input_w;
    for (const ConvInit& c : convs) {
        arch.convs.push_back(ConvSpec{.out_ch = c.out_ch, .kernel = c.kernel,
                                      .pool_after = c.pool_after});
    }
    arch.joint_inputs = joint_inputs;
    arch.joint_width = joint_width;
    arch.merged_width = merged_width;
    arch.n_actions = n_actions;
    finalize_arch(arch);
    return arch;
}

QNetwork QNetwork::build(const NetworkArch& arch, std::uint64_t seed) {
    QNetwork net;
    net.arch_ = arch;
    for (const ConvSpec& spec : arch.convs) {
        ConvLayer layer;
        layer.spec = spec;
        layer.w.resize(static_cast<std::size_t>(spec.out_ch) * spec.in_ch * spec.kernel *
                       spec.kernel);
        layer.b.assign(spec.out_ch, 0.0);
        net.convs_.push_back(std::move(layer));
    }
    auto make_dense = [](int in_n, int out_n) {
        DenseLayer d;
        d.in_n = in_n;
        d.out_n = out_n;
        d.w.resize(static_cast<std::size_t>(in_n) * out_n);
        d.b.assign(out_n, 0.0);
        return d;
    };
    net.joint_fc_ = make_dense(arch.joint_inputs, arch.joint_width);
    net.merged_fc_ = make_dense(arch.merged_inputs(), arch.merged_width);
    net.out_fc_ = make_dense(arch.merged_width, arch.n_actions);

    // He-uniform: U(-sqrt(6/fan_in), +sqrt(6/fan_in)), weights only.
    Rng rng(mix_seed(seed, 0x696E6974ULL));
    for (ConvLayer& layer : net.convs_) {
        const double limit =
            std::sqrt(6.0 / (static_cast<double>(layer.spec.in_ch) * layer.spec.kernel *
                             layer.spec.kernel));
        for (double& v : layer.w) v = rng.uniform(-limit, limit);
    }
    for (DenseLayer* d : {&net.joint_fc_, &net.merged_fc_, &net.out_fc_}) {
        const double limit = std::sqrt(6.0 / d->in_n);
        for (double& v : d->w) v = rng.uniform(-limit, limit);
    }
    return net;
}

void QNetwork::normalize_inputs(const State& s, Workspace& ws) const {
    if (arch_.input_h != kTactileHeight || arch_.input_w != kTactileWidth ||
        arch_.joint_inputs != 4) {
        throw ShapeError("state-based forward requires the standard 64x48 input layout");
    }
    prepare_workspace(arch_, ws);
    for (int i = 0; i < kTactilePixels; ++i) {
        ws.image_in[i] = s.image.pixels[i] / 255.0;
    }
    ws.joints_in[0] = s.joints.theta3 / arch_.theta_scale;
    ws.joints_in[1] = s.joints.theta4 / arch_.theta_scale;
    ws.joints_in[2] = s.joints.vel3 / arch_.vel_scale;
    ws.joints_in[3] = s.joints.vel4 / arch_.vel_scale;
}

QValues QNetwork::forward(const State& s) const {
    Workspace ws;
    return forward(s, ws);
}

QValues QNetwork::forward(const State& s, Workspace& ws) const {
    normalize_inputs(s, ws);
    return forward_prepared(ws);
}

QValues QNetwork::forward_raw(std::span<const double> image, std::span<const double> joints,
                              Workspace& ws) const {
    prepare_workspace(arch_, ws);
    if (image.size() != ws.image_in.size() || joints.size() != ws.joints_in.size()) {
        throw ShapeError("raw input sizes do not match the architecture");
    }
    std::copy(image.begin(), image.end(), ws.image_in.begin());
    std::copy(joints.begin(), joints.end(), ws.joints_in.begin());
    return forward_prepared(ws);
}

QValues QNetwork::forward_prepared(Workspace& ws) const {
    const double* in = ws.image_in.data();
    for (std::size_t l = 0; l < convs_.size(); ++l) {
        const ConvLayer& layer = convs_[l];
        conv_forward(layer, in, ws.conv_z[l].data(), ws.conv_a[l].data());
        check_finite(ws.conv_z[l], ("conv" + std::to_string(l + 1)).c_str());
        if (layer.spec.pool_after) {
            pool_forward(layer.spec, ws.conv_a[l].data(), ws.conv_p[l].data(),
                         ws.pool_idx[l].data());
            in = ws.conv_p[l].data();
        } else {
            in = ws.conv_a[l].data();
        }
    }

    dense_forward(joint_fc_, ws.joints_in.data(), ws.joint_z.data());
    check_finite(ws.joint_z, "joint_fc");
    for (int j = 0; j < joint_fc_.out_n; ++j) {
        ws.joint_a[j] = ws.joint_z[j] > 0.0 ? ws.joint_z[j] : 0.0;
    }

    const int flat = arch_.flat_size();
    std::memcpy(ws.merged_in.data(), in, static_cast<std::size_t>(flat) * sizeof(double));
    std::memcpy(ws.merged_in.data() + flat, ws.joint_a.data(),
                static_cast<std::size_t>(arch_.joint_width) * sizeof(double));

    dense_forward(merged_fc_, ws.merged_in.data(), ws.merged_z.data());
    check_finite(ws.merged_z, "merged_fc");
    for (int j = 0; j < merged_fc_.out_n; ++j) {
        ws.merged_a[j] = ws.merged_z[j] > 0.0 ? ws.merged_z[j] : 0.0;
    }

    dense_forward(out_fc_, ws.merged_a.data(), ws.q.data());
    check_finite(ws.q, "output");
    return ws.q;
}

void QNetwork::backward_deltas(int action, double target, Workspace& ws) const {
    std::fill(ws.d_q.begin(), ws.d_q.end(), 0.0);
    ws.d_q[action] = -2.0 * (target - ws.q[action]);

    // Output layer is linear; only the taken action's row carries gradient.
    const double* out_row = out_fc_.w.data() + static_cast<std::size_t>(action) * out_fc_.in_n;
    for (int j = 0; j < merged_fc_.out_n; ++j) {
        const double d_a = ws.d_q[action] * out_row[j];
        ws.d_merged_z[j] = ws.merged_z[j] > 0.0 ? d_a : 0.0;
    }

    std::fill(ws.d_merged_in.begin(), ws.d_merged_in.end(), 0.0);
    for (int j = 0; j < merged_fc_.out_n; ++j) {
        const double dz = ws.d_merged_z[j];
        if (dz == 0.0) continue;
        const double* wrow = merged_fc_.w.data() + static_cast<std::size_t>(j) * merged_fc_.in_n;
        for (int i = 0; i < merged_fc_.in_n; ++i) ws.d_merged_in[i] += dz * wrow[i];
    }

    const int flat = arch_.flat_size();
    for (int j = 0; j < joint_fc_.out_n; ++j) {
        ws.d_joint_z[j] = ws.joint_z[j] > 0.0 ? ws.d_merged_in[flat + j] : 0.0;
    }

    // Image branch.
    std::copy(ws.d_merged_in.begin(), ws.d_merged_in.begin() + flat,
              ws.d_pool[convs_.size() - 1].begin());
    for (int l = static_cast<int>(convs_.size()) - 1; l >= 0; --l) {
        const ConvLayer& layer = convs_[l];
        const ConvSpec& c = layer.spec;
        const int out_volume = c.out_volume();

        // Delta wrt the pre-activation: unpool, then ReLU mask.
        double* dz = ws.d_act.data();
        if (c.pool_after) {
            std::fill(dz, dz + out_volume, 0.0);
            const auto& idx = ws.pool_idx[l];
            const auto& dp = ws.d_pool[l];
            for (std::size_t i = 0; i < idx.size(); ++i) dz[idx[i]] += dp[i];
        } else {
            std::copy(ws.d_pool[l].begin(), ws.d_pool[l].end(), dz);
        }
        const auto& z = ws.conv_z[l];
        for (int i = 0; i < out_volume; ++i) {
            if (z[i] <= 0.0) dz[i] = 0.0;
        }

        const double* in =
            l == 0 ? ws.image_in.data()
                   : (convs_[l - 1].spec.pool_after ? ws.conv_p[l - 1].data()
                                                    : ws.conv_a[l - 1].data());

        // Parameter gradients.
        auto& gw = ws.g_conv_w[l];
        auto& gb = ws.g_conv_b[l];
        const int out_plane = c.out_h * c.out_w;
        const int in_plane = c.in_h * c.in_w;
        for (int oc = 0; oc < c.out_ch; ++oc) {
            const double* dzp = dz + static_cast<std::size_t>(oc) * out_plane;
            double acc = 0.0;
            for (int i = 0; i < out_plane; ++i) acc += dzp[i];
            gb[oc] = acc;
            for (int ic = 0; ic < c.in_ch; ++ic) {
                const double* ip = in + static_cast<std::size_t>(ic) * in_plane;
                double* gwp = gw.data() +
                              (static_cast<std::size_t>(oc) * c.in_ch + ic) * c.kernel * c.kernel;
                for (int ky = 0; ky < c.kernel; ++ky) {
                    for (int kx = 0; kx < c.kernel; ++kx) {
                        double sum = 0.0;
                        for (int oy = 0; oy < c.out_h; ++oy) {
                            sum += dot(dzp + oy * c.out_w, ip + (oy + ky) * c.in_w + kx, c.out_w);
                        }
                        gwp[ky * c.kernel + kx] = sum;
                    }
                }
            }
        }

        // Delta wrt the layer input, accumulated into the previous layer's
        // output delta. Not needed below the first conv.
        if (l > 0) {
            auto& d_in = ws.d_pool[l - 1];
            std::fill(d_in.begin(), d_in.end(), 0.0);
            for (int oc = 0; oc < c.out_ch; ++oc) {
                const double* dzp = dz + static_cast<std::size_t>(oc) * out_plane;
                for (int ic = 0; ic < c.in_ch; ++ic) {
                    double* dip = d_in.data() + static_cast<std::size_t>(ic) * in_plane;
                    const double* wp =
                        layer.w.data() +
                        (static_cast<std::size_t>(oc) * c.in_ch + ic) * c.kernel * c.kernel;
                    for (int ky = 0; ky < c.kernel; ++ky) {
                        for (int kx = 0; kx < c.kernel; ++kx) {
                            const double wv = wp[ky * c.kernel + kx];
                            for (int oy = 0; oy < c.out_h; ++oy) {
                                const double* dzrow = dzp + oy * c.out_w;
                                double* dirow = dip + (oy + ky) * c.in_w + kx;
                                for (int ox = 0; ox < c.out_w; ++ox) {
                                    dirow[ox] += wv * dzrow[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

double QNetwork::gradient_norm_sq(const Workspace& ws) const {
    double total = 0.0;
    for (std::size_t l = 0; l < convs_.size(); ++l) {
        total += norm_sq(ws.g_conv_w[l]) + norm_sq(ws.g_conv_b[l]);
    }
    // Dense gradients are rank-one (dz outer input), so their norms are
    // products of vector norms.
    total += norm_sq(ws.d_joint_z) * (norm_sq(ws.joints_in) + 1.0);
    total += norm_sq(ws.d_merged_z) * (norm_sq(ws.merged_in) + 1.0);
    total += norm_sq(ws.d_q) * (norm_sq(ws.merged_a) + 1.0);
    return total;
}

void QNetwork::apply_update(double lr, Workspace& ws) {
    for (std::size_t l = 0; l < convs_.size(); ++l) {
        ConvLayer& layer = convs_[l];
        const auto& gw = ws.g_conv_w[l];
        const auto& gb = ws.g_conv_b[l];
        for (std::size_t i = 0; i < layer.w.size(); ++i) layer.w[i] -= lr * gw[i];
        for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= lr * gb[i];
    }
    for (int j = 0; j < joint_fc_.out_n; ++j) {
        const double dz = ws.d_joint_z[j];
        if (dz == 0.0) continue;
        double* wrow = joint_fc_.w.data() + static_cast<std::size_t>(j) * joint_fc_.in_n;
        for (int i = 0; i < joint_fc_.in_n; ++i) wrow[i] -= lr * dz * ws.joints_in[i];
        joint_fc_.b[j] -= lr * dz;
    }
    for (int j = 0; j < merged_fc_.out_n; ++j) {
        const double dz = ws.d_merged_z[j];
        if (dz == 0.0) continue;
        const double scale = lr * dz;
        double* wrow = merged_fc_.w.data() + static_cast<std::size_t>(j) * merged_fc_.in_n;
        for (int i = 0; i < merged_fc_.in_n; ++i) wrow[i] -= scale * ws.merged_in[i];
        merged_fc_.b[j] -= lr * dz;
    }
    for (int j = 0; j < out_fc_.out_n; ++j) {
        const double dq = ws.d_q[j];
        if (dq == 0.0) continue;
        double* wrow = out_fc_.w.data() + static_cast<std::size_t>(j) * out_fc_.in_n;
        for (int i = 0; i < out_fc_.in_n; ++i) wrow[i] -= lr * dq * ws.merged_a[i];
        out_fc_.b[j] -= lr * dq;
    }
}

double QNetwork::backward_step(const State& s, int action, double target, double lr,
                               Workspace& ws) {
    forward(s, ws);
    if (action < 0 || action >= arch_.n_actions) {
        throw ShapeError("action index out of range");
    }
    if (!std::isfinite(target)) throw NumericError("non-finite regression target");
    const double err = target - ws.q[action];
    backward_deltas(action, target, ws);
    const double gnorm_sq = gradient_norm_sq(ws);
    if (!std::isfinite(gnorm_sq) || gnorm_sq > kGradientNormLimit * kGradientNormLimit) {
        throw NumericError("exploding gradient (norm " + std::to_string(std::sqrt(gnorm_sq)) +
                           ")");
    }
    apply_update(lr, ws);
    return err * err;
}

double QNetwork::backward_step_raw(std::span<const double> image, std::span<const double> joints,
                                   int action, double target, double lr, Workspace& ws) {
    forward_raw(image, joints, ws);
    if (action < 0 || action >= arch_.n_actions) {
        throw ShapeError("action index out of range");
    }
    if (!std::isfinite(target)) throw NumericError("non-finite regression target");
    const double err = target - ws.q[action];
    backward_deltas(action, target, ws);
    const double gnorm_sq = gradient_norm_sq(ws);
    if (!std::isfinite(gnorm_sq) || gnorm_sq > kGradientNormLimit * kGradientNormLimit) {
        throw NumericError("exploding gradient (norm " + std::to_string(std::sqrt(gnorm_sq)) +
                           ")");
    }
    apply_update(lr, ws);
    return err * err;
}

std::vector<TensorRef> QNetwork::parameter_tensors() {
    std::vector<TensorRef> refs;
    for (std::size_t l = 0; l < convs_.size(); ++l) {
        refs.push_back({"conv" + std::to_string(l + 1) + ".w", convs_[l].w.data(),
                        convs_[l].w.size()});
        refs.push_back({"conv" + std::to_string(l + 1) + ".b", convs_[l].b.data(),
                        convs_[l].b.size()});
    }
    refs.push_back({"joint_fc.w", joint_fc_.w.data(), joint_fc_.w.size()});
    refs.push_back({"joint_fc.b", joint_fc_.b.data(), joint_fc_.b.size()});
    refs.push_back({"merged_fc.w", merged_fc_.w.data(), merged_fc_.w.size()});
    refs.push_back({"merged_fc.b", merged_fc_.b.data(), merged_fc_.b.size()});
    refs.push_back({"out_fc.w", out_fc_.w.data(), out_fc_.w.size()});
    refs.push_back({"out_fc.b", out_fc_.b.data(), out_fc_.b.size()});
    return refs;
}

std::vector<TensorRef> QNetwork::parameter_tensors() const {
    return const_cast<QNetwork*>(this)->parameter_tensors();
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const TensorRef& t : parameter_tensors()) n += t.size;
    return n;
}

bool QNetwork::same_arch(const QNetwork& other) const {
    if (arch_.input_h != other.arch_.input_h || arch_.input_w != other.arch_.input_w ||
        arch_.joint_inputs != other.arch_.joint_inputs ||
        arch_.joint_width != other.arch_.joint_width ||
        arch_.merged_width != other.arch_.merged_width ||
        arch_.n_actions != other.arch_.n_actions ||
        arch_.convs.size() != other.arch_.convs.size()) {
        return false;
    }
    for (std::size_t l = 0; l < arch_.convs.size(); ++l) {
        const ConvSpec& a = arch_.convs[l];
        const ConvSpec& b = other.arch_.convs[l];
        if (a.out_ch != b.out_ch || a.kernel != b.kernel || a.pool_after != b.pool_after) {
            return false;
        }
    }
    return true;
}

void sync_target(const QNetwork& source, QNetwork& target) {
    if (!source.same_arch(target)) {
        throw ShapeError("cannot sync networks with different architectures");
    }
    target.convs_ = source.convs_;
    target.joint_fc_ = source.joint_fc_;
    target.merged_fc_ = source.merged_fc_;
    target.out_fc_ = source.out_fc_;
}

void save_checkpoint(const QNetwork& net, const std::filesystem::path& path) {
    const NetworkArch& arch = net.arch();
    BinaryWriter w;
    w.put_bytes(kMagic, sizeof(kMagic));
    w.put_u16(kVersion);
    w.put_u8(static_cast<std::uint8_t>(arch.variant));
    w.put_u16(static_cast<std::uint16_t>(arch.input_h));
    w.put_u16(static_cast<std::uint16_t>(arch.input_w));
    w.put_u16(static_cast<std::uint16_t>(arch.convs.size()));
    for (const ConvSpec& c : arch.convs) {
        w.put_u16(static_cast<std::uint16_t>(c.out_ch));
        w.put_u16(static_cast<std::uint16_t>(c.kernel));
        w.put_u8(c.pool_after ? 1 : 0);
    }
    w.put_u16(static_cast<std::uint16_t>(arch.joint_inputs));
    w.put_u16(static_cast<std::uint16_t>(arch.joint_width));
    w.put_u16(static_cast<std::uint16_t>(arch.merged_width));
    w.put_u16(static_cast<std::uint16_t>(arch.n_actions));
    w.put_f64(arch.theta_scale);
    w.put_f64(arch.vel_scale);
    for (const TensorRef& t : net.parameter_tensors()) {
        for (std::size_t i = 0; i < t.size; ++i) w.put_f64(t.data[i]);
    }
    w.put_u64(fnv1a(std::span<const unsigned char>(w.bytes().data(), w.size())));
    write_file_bytes(path, w.bytes());
}

QNetwork load_checkpoint(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_file_bytes(path);
    if (bytes.size() < sizeof(kMagic) + 2 + 8) {
        throw FormatError("checkpoint file too short", bytes.size());
    }
    const std::uint64_t stored_hash = [&bytes] {
        std::uint64_t h = 0;
        for (int i = 0; i < 8; ++i) {
            h |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
        }
        return h;
    }();
    const auto body = std::span<const unsigned char>(bytes.data(), bytes.size() - 8);
    if (fnv1a(body) != stored_hash) {
        throw FormatError("checkpoint integrity hash mismatch", bytes.size() - 8);
    }

    BinaryReader r(std::vector<unsigned char>(body.begin(), body.end()));
    char magic[sizeof(kMagic)];
    r.get_bytes(reinterpret_cast<unsigned char*>(magic), sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a checkpoint file (bad magic)", 0);
    }
    if (r.get_u16() != kVersion) throw FormatError("unsupported checkpoint version", 9);

    const auto variant = static_cast<ArchVariant>(r.get_u8());
    const int input_h = r.get_u16();
    const int input_w = r.get_u16();
    const int n_convs = r.get_u16();
    std::vector<ConvInit> convs;
    for (int l = 0; l < n_convs; ++l) {
        ConvInit c{};
        c.out_ch = r.get_u16();
        c.kernel = r.get_u16();
        c.pool_after = r.get_u8() != 0;
        convs.push_back(c);
    }
    const int joint_inputs = r.get_u16();
    const int joint_width = r.get_u16();
    const int merged_width = r.get_u16();
    const int n_actions = r.get_u16();
    const double theta_scale = r.get_f64();
    const double vel_scale = r.get_f64();

    NetworkArch arch = NetworkArch::custom(input_h, input_w, convs, joint_inputs, joint_width,
                                           merged_width, n_actions);
    arch.variant = variant;
    arch.theta_scale = theta_scale;
    arch.vel_scale = vel_scale;

    QNetwork net = QNetwork::build(arch, 0);
    for (const TensorRef& t : net.parameter_tensors()) {
        for (std::size_t i = 0; i < t.size; ++i) t.data[i] = r.get_f64();
    }
    if (r.remaining() != 0) {
        throw FormatError("trailing bytes after parameter tensors", r.offset());
    }
    return net;
}

double gradient_check_impl(QNetwork net, std::span<const double> image,
                           std::span<const double> joints, int action, double target,
                           int samples_per_tensor, std::uint64_t seed) {
    Workspace ws;
    net.forward_raw(image, joints, ws);
    net.backward_deltas(action, target, ws);

    // Analytic gradient for one flat parameter index within a named tensor.
    auto analytic = [&](const std::string& name, std::size_t idx) -> double {
        for (std::size_t l = 0; l < net.convs_.size(); ++l) {
            if (name == "conv" + std::to_string(l + 1) + ".w") return ws.g_conv_w[l][idx];
            if (name == "conv" + std::to_string(l + 1) + ".b") return ws.g_conv_b[l][idx];
        }
        if (name == "joint_fc.w") {
            return ws.d_joint_z[idx / net.joint_fc_.in_n] * ws.joints_in[idx % net.joint_fc_.in_n];
        }
        if (name == "joint_fc.b") return ws.d_joint_z[idx];
        if (name == "merged_fc.w") {
            return ws.d_merged_z[idx / net.merged_fc_.in_n] *
                   ws.merged_in[idx % net.merged_fc_.in_n];
        }
        if (name == "merged_fc.b") return ws.d_merged_z[idx];
        if (name == "out_fc.w") {
            return ws.d_q[idx / net.out_fc_.in_n] * ws.merged_a[idx % net.out_fc_.in_n];
        }
        if (name == "out_fc.b") return ws.d_q[idx];
        throw ShapeError("unknown tensor " + name);
    };

    Workspace probe_ws;
    auto loss_at = [&]() {
        const QValues q = net.forward_raw(image, joints, probe_ws);
        const double err = target - q[action];
        return err * err;
    };

    const double h = 1e-6;
    Rng rng(mix_seed(seed, 0x67636865636BULL));
    double max_rel = 0.0;
    for (const TensorRef& t : net.parameter_tensors()) {
        const int n = static_cast<int>(std::min<std::size_t>(samples_per_tensor, t.size));
        for (int k = 0; k < n; ++k) {
            const std::size_t idx = rng.uniform_int(t.size);
            const double a = analytic(t.name, idx);
            const double saved = t.data[idx];
            t.data[idx] = saved + h;
            const double lp = loss_at();
            t.data[idx] = saved - h;
            const double lm = loss_at();
            t.data[idx] = saved;
            const double numeric = (lp - lm) / (2.0 * h);
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

double gradient_check(const QNetwork& net, const State& s, int action, double target,
                      int samples_per_tensor, std::uint64_t seed) {
    Workspace ws;
    net.forward(s, ws);  // populates normalized inputs
    return gradient_check_impl(net, ws.image_in, ws.joints_in, action, target,
                               samples_per_tensor, seed);
}

double gradient_check_raw(const QNetwork& net, std::span<const double> image,
                          std::span<const double> joints, int action, double target,
                          int samples_per_tensor, std::uint64_t seed) {
    return gradient_check_impl(net, image, joints, action, target, samples_per_tensor, seed);
}

int argmax(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

}  // namespace sfdqn
