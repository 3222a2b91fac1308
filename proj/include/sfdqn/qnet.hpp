#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sfdqn/rl.hpp"

namespace sfdqn {

using QValues = std::vector<double>;

enum class ArchVariant : std::uint8_t { shallow = 0, deep = 1, custom = 2 };

struct ConvSpec {
    int in_ch = 1;
    int out_ch = 1;
    int kernel = 3;      // square, stride 1, no padding
    bool pool_after = false;  // 2x2 max pool, floor semantics
    // Derived spatial dims.
    int in_h = 0, in_w = 0;
    int out_h = 0, out_w = 0;
    int pooled_h = 0, pooled_w = 0;

    int out_volume() const { return out_ch * out_h * out_w; }
    int pooled_volume() const { return out_ch * pooled_h * pooled_w; }
};

struct ConvInit {
    int out_ch;
    int kernel;
    bool pool_after;
};

// Two-branch value network: conv stack over the tactile image, one dense
// layer over the joint values, concatenation, two dense layers to one Q value
// per action. Every conv and hidden dense layer is ReLU-activated; the output
// layer is linear.
struct NetworkArch {
    ArchVariant variant = ArchVariant::shallow;
    int input_h = kTactileHeight;
    int input_w = kTactileWidth;
    std::vector<ConvSpec> convs;
    int joint_inputs = 4;
    int joint_width = 32;
    int merged_width = 128;
    int n_actions = kNumActions;
    // Input normalization: image is divided by 255, joint angles by
    // theta_scale, joint velocities by vel_scale (the per-action delta).
    double theta_scale = 2.0;
    double vel_scale = 1.0;

    int flat_size() const { return convs.back().pooled_volume(); }
    int merged_inputs() const { return flat_size() + joint_width; }

    // shallow: conv 8@4x4 + pool, conv 16@3x3.
    // deep: five 4x4 convs (8 filters) then five 3x3 convs (16 filters); a
    // 2x2 pool follows every second conv where the remaining stack still
    // fits, which on 64x48 input places pools after convs 2 and 10.
    static NetworkArch make(ArchVariant v);
    static NetworkArch custom(int input_h, int input_w, const std::vector<ConvInit>& convs,
                              int joint_inputs, int joint_width, int merged_width, int n_actions);
};

struct ConvLayer {
    ConvSpec spec;
    std::vector<double> w;  // [out_ch][in_ch][k][k]
    std::vector<double> b;  // [out_ch]
};

struct DenseLayer {
    int in_n = 0;
    int out_n = 0;
    std::vector<double> w;  // [out][in]
    std::vector<double> b;  // [out]
};

// Reusable forward/backward scratch. Holding one per actor keeps forward
// const and safe to run concurrently on a frozen network.
struct Workspace {
    std::vector<double> image_in, joints_in;
    std::vector<std::vector<double>> conv_z, conv_a, conv_p;
    std::vector<std::vector<int>> pool_idx;
    std::vector<double> joint_z, joint_a;
    std::vector<double> merged_in, merged_z, merged_a;
    std::vector<double> q;
    // Backward buffers.
    std::vector<double> d_q, d_merged_z, d_merged_in, d_joint_z;
    std::vector<std::vector<double>> d_pool;  // delta wrt each conv's (pooled) output
    std::vector<double> d_act;                // scratch, max conv out volume
    std::vector<std::vector<double>> g_conv_w, g_conv_b;
};

struct TensorRef {
    std::string name;
    double* data;
    std::size_t size;
};

class QNetwork {
public:
    // He-uniform weights, zero biases, deterministic under seed.
    static QNetwork build(const NetworkArch& arch, std::uint64_t seed);

    const NetworkArch& arch() const { return arch_; }

    QValues forward(const State& s) const;
    QValues forward(const State& s, Workspace& ws) const;
    QValues forward_raw(std::span<const double> image, std::span<const double> joints,
                        Workspace& ws) const;

    // One SGD step on L = (target - Q(s, action))^2. Only the taken action's
    // output receives gradient. Returns the pre-update loss.
    double backward_step(const State& s, int action, double target, double lr, Workspace& ws);
    double backward_step_raw(std::span<const double> image, std::span<const double> joints,
                             int action, double target, double lr, Workspace& ws);

    std::vector<TensorRef> parameter_tensors();
    std::vector<TensorRef> parameter_tensors() const;
    std::size_t parameter_count() const;

    const std::vector<ConvLayer>& conv_layers() const { return convs_; }
    const DenseLayer& joint_layer() const { return joint_fc_; }
    const DenseLayer& merged_layer() const { return merged_fc_; }
    const DenseLayer& output_layer() const { return out_fc_; }
    DenseLayer& output_layer() { return out_fc_; }

    bool same_arch(const QNetwork& other) const;

    friend void sync_target(const QNetwork& source, QNetwork& target);
    friend double gradient_check_impl(QNetwork net, std::span<const double> image,
                                      std::span<const double> joints, int action, double target,
                                      int samples_per_tensor, std::uint64_t seed);

private:
    void normalize_inputs(const State& s, Workspace& ws) const;
    QValues forward_prepared(Workspace& ws) const;
    // Computes all backprop deltas and the conv parameter gradients for the
    // state already traced in ws. No parameters are modified.
    void backward_deltas(int action, double target, Workspace& ws) const;
    double gradient_norm_sq(const Workspace& ws) const;
    void apply_update(double lr, Workspace& ws);

    NetworkArch arch_;
    std::vector<ConvLayer> convs_;
    DenseLayer joint_fc_;
    DenseLayer merged_fc_;
    DenseLayer out_fc_;
};

// Copies parameters; the architectures must match.
void sync_target(const QNetwork& source, QNetwork& target);

// Magic "SFDQN-CK\0", version, arch descriptor, tensors in declaration order
// as little-endian doubles, trailing FNV-1a integrity hash.
void save_checkpoint(const QNetwork& net, const std::filesystem::path& path);
QNetwork load_checkpoint(const std::filesystem::path& path);

// Compares analytic gradients of L = (target - Q(s, action))^2 against
// central finite differences (h = 1e-6) on a seeded random sample of
// parameters per tensor. Returns the max of |a - n| / max(|a|, |n|, 1e-6).
double gradient_check(const QNetwork& net, const State& s, int action, double target,
                      int samples_per_tensor, std::uint64_t seed);
double gradient_check_raw(const QNetwork& net, std::span<const double> image,
                          std::span<const double> joints, int action, double target,
                          int samples_per_tensor, std::uint64_t seed);

int argmax(std::span<const double> values);

}  // namespace sfdqn
