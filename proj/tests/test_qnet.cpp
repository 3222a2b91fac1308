#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "sfdqn/binio.hpp"
#include "sfdqn/errors.hpp"
#include "sfdqn/qnet.hpp"
#include "sfdqn/rng.hpp"

using namespace sfdqn;

namespace {

State random_state(std::uint64_t seed) {
    Rng rng(seed);
    State s;
    for (auto& p : s.image.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(256));
    s.joints.theta3 = rng.uniform(-1.5, 1.5);
    s.joints.theta4 = rng.uniform(-1.5, 1.5);
    s.joints.vel3 = rng.uniform(-1.0, 1.0);
    s.joints.vel4 = rng.uniform(-1.0, 1.0);
    return s;
}

// 2x2 image, one 2x2 conv filter, 2 joint inputs, widths 1/2, 2 actions.
// Small enough that forward and one update step fit on paper.
QNetwork micro_net() {
    const NetworkArch arch =
        NetworkArch::custom(2, 2, {{1, 2, false}}, 2, 1, 2, 2);
    QNetwork net = QNetwork::build(arch, 0);
    const std::vector<std::vector<double>> tensors = {
        {0.1, 0.2, -0.1, 0.3},        // conv kernel
        {0.05},                       // conv bias
        {0.4, 0.2},                   // joint weights
        {0.1},                        // joint bias
        {0.3, -0.2, 0.5, 0.4},        // merged weights, rows [a_c, a_j]
        {0.02, -0.01},                // merged bias
        {1.0, -0.5, 0.25, 0.75},      // output weights
        {0.1, -0.2},                  // output bias
    };
    auto refs = net.parameter_tensors();
    REQUIRE(refs.size() == tensors.size());
    for (std::size_t t = 0; t < refs.size(); ++t) {
        REQUIRE(refs[t].size == tensors[t].size());
        for (std::size_t i = 0; i < tensors[t].size(); ++i) refs[t].data[i] = tensors[t][i];
    }
    return net;
}

const std::vector<double> kMicroImage = {0.1, 0.2, 0.3, 0.4};
const std::vector<double> kMicroJoints = {0.5, -0.3};

}  // namespace

TEST_SUITE("qnet") {

TEST_CASE("shallow architecture: layer shapes and parameter tensors") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    REQUIRE(arch.convs.size() == 2);
    CHECK(arch.convs[0].out_ch == 8);
    CHECK(arch.convs[0].kernel == 4);
    CHECK(arch.convs[0].out_h == 45);
    CHECK(arch.convs[0].out_w == 61);
    CHECK(arch.convs[0].pool_after);
    CHECK(arch.convs[0].pooled_h == 22);
    CHECK(arch.convs[0].pooled_w == 30);
    CHECK(arch.convs[1].out_ch == 16);
    CHECK(arch.convs[1].kernel == 3);
    CHECK_FALSE(arch.convs[1].pool_after);
    CHECK(arch.convs[1].out_h == 20);
    CHECK(arch.convs[1].out_w == 28);
    CHECK(arch.flat_size() == 16 * 20 * 28);

    const QNetwork net = QNetwork::build(arch, 1);
    // 2 conv layers and 3 dense layers, weights + biases each.
    CHECK(net.parameter_tensors().size() == 2 * 2 + 3 * 2);
}

TEST_CASE("deep architecture: ten convs, pools only where the stack still fits") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::deep);
    REQUIRE(arch.convs.size() == 10);
    for (int l = 0; l < 5; ++l) CHECK(arch.convs[l].kernel == 4);
    for (int l = 5; l < 10; ++l) CHECK(arch.convs[l].kernel == 3);
    for (int l = 0; l < 10; ++l) {
        CHECK(arch.convs[l].pool_after == (l == 1 || l == 9));
        CHECK(arch.convs[l].out_h >= 1);
        CHECK(arch.convs[l].out_w >= 1);
    }
    CHECK(arch.convs.back().pooled_h == 1);
    CHECK(arch.convs.back().pooled_w == 5);
    CHECK(arch.flat_size() == 16 * 1 * 5);

    const QNetwork net = QNetwork::build(arch, 1);
    CHECK(net.parameter_tensors().size() == 10 * 2 + 3 * 2);
}

TEST_CASE("building with the same seed is deterministic") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    QNetwork a = QNetwork::build(arch, 42);
    QNetwork b = QNetwork::build(arch, 42);
    const auto ta = a.parameter_tensors();
    const auto tb = b.parameter_tensors();
    for (std::size_t t = 0; t < ta.size(); ++t) {
        for (std::size_t i = 0; i < ta[t].size; ++i) CHECK(ta[t].data[i] == tb[t].data[i]);
    }
    QNetwork c = QNetwork::build(arch, 43);
    CHECK(c.parameter_tensors()[0].data[0] != a.parameter_tensors()[0].data[0]);
}

TEST_CASE("an all-zero network outputs zero for any state") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    QNetwork net = QNetwork::build(arch, 1);
    for (const TensorRef& t : net.parameter_tensors()) {
        std::fill(t.data, t.data + t.size, 0.0);
    }
    const QValues q = net.forward(random_state(7));
    REQUIRE(q.size() == kNumActions);
    for (double v : q) CHECK(v == 0.0);
}

TEST_CASE("forward is deterministic and finite") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    const QNetwork net = QNetwork::build(arch, 9);
    const State s = random_state(8);
    const QValues q1 = net.forward(s);
    const QValues q2 = net.forward(s);
    REQUIRE(q1.size() == kNumActions);
    for (int i = 0; i < kNumActions; ++i) {
        CHECK(q1[i] == q2[i]);
        CHECK(std::isfinite(q1[i]));
    }
}

TEST_CASE("micro-net forward matches the hand computation") {
    QNetwork net = micro_net();
    Workspace ws;
    const QValues q = net.forward_raw(kMicroImage, kMicroJoints, ws);

    // conv: 0.1*0.1 + 0.2*0.2 - 0.1*0.3 + 0.3*0.4 + 0.05 = 0.19
    // joint: 0.4*0.5 + 0.2*(-0.3) + 0.1 = 0.24
    // merged0: 0.3*0.19 - 0.2*0.24 + 0.02 = 0.029
    // merged1: 0.5*0.19 + 0.4*0.24 - 0.01 = 0.181
    // q0: 1.0*0.029 - 0.5*0.181 + 0.1 = 0.0385
    // q1: 0.25*0.029 + 0.75*0.181 - 0.2 = -0.057
    REQUIRE(q.size() == 2);
    CHECK(q[0] == doctest::Approx(0.0385).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(-0.057).epsilon(1e-12));
}

TEST_CASE("micro-net single update matches the hand-derived gradient step") {
    QNetwork net = micro_net();
    Workspace ws;
    const double target = 1.0;
    const double lr = 0.1;
    const double loss = net.backward_step_raw(kMicroImage, kMicroJoints, 1, target, lr, ws);

    // Forward values (above): a_c = 0.19, a_j = 0.24, a_m = (0.029, 0.181),
    // q1 = -0.057. err = 1.057, loss = err^2.
    const double err = 1.0 - (-0.057);
    CHECK(loss == doctest::Approx(err * err).epsilon(1e-12));

    // dL/dq1 = -2 err; output row 1: dW = dq1 * a_m, db = dq1.
    const double dq1 = -2.0 * err;
    // merged deltas: dz_m = dq1 * W_out_row1 (both pre-activations positive).
    const double dzm0 = dq1 * 0.25;
    const double dzm1 = dq1 * 0.75;
    // branch deltas through the merged weights.
    const double d_ac = dzm0 * 0.3 + dzm1 * 0.5;
    const double d_aj = dzm0 * (-0.2) + dzm1 * 0.4;

    const auto refs = net.parameter_tensors();
    // conv kernel and bias
    const double image[4] = {0.1, 0.2, 0.3, 0.4};
    const double kernel0[4] = {0.1, 0.2, -0.1, 0.3};
    for (int i = 0; i < 4; ++i) {
        CHECK(refs[0].data[i] == doctest::Approx(kernel0[i] - lr * d_ac * image[i]).epsilon(1e-9));
    }
    CHECK(refs[1].data[0] == doctest::Approx(0.05 - lr * d_ac).epsilon(1e-9));
    // joint weights and bias
    CHECK(refs[2].data[0] == doctest::Approx(0.4 - lr * d_aj * 0.5).epsilon(1e-9));
    CHECK(refs[2].data[1] == doctest::Approx(0.2 - lr * d_aj * (-0.3)).epsilon(1e-9));
    CHECK(refs[3].data[0] == doctest::Approx(0.1 - lr * d_aj).epsilon(1e-9));
    // merged weights (inputs were a_c = 0.19, a_j = 0.24) and biases
    CHECK(refs[4].data[0] == doctest::Approx(0.3 - lr * dzm0 * 0.19).epsilon(1e-9));
    CHECK(refs[4].data[1] == doctest::Approx(-0.2 - lr * dzm0 * 0.24).epsilon(1e-9));
    CHECK(refs[4].data[2] == doctest::Approx(0.5 - lr * dzm1 * 0.19).epsilon(1e-9));
    CHECK(refs[4].data[3] == doctest::Approx(0.4 - lr * dzm1 * 0.24).epsilon(1e-9));
    CHECK(refs[5].data[0] == doctest::Approx(0.02 - lr * dzm0).epsilon(1e-9));
    CHECK(refs[5].data[1] == doctest::Approx(-0.01 - lr * dzm1).epsilon(1e-9));
    // output layer: row 0 untouched, row 1 stepped
    CHECK(refs[6].data[0] == 1.0);
    CHECK(refs[6].data[1] == -0.5);
    CHECK(refs[6].data[2] == doctest::Approx(0.25 - lr * dq1 * 0.029).epsilon(1e-9));
    CHECK(refs[6].data[3] == doctest::Approx(0.75 - lr * dq1 * 0.181).epsilon(1e-9));
    CHECK(refs[7].data[0] == 0.1);
    CHECK(refs[7].data[1] == doctest::Approx(-0.2 - lr * dq1).epsilon(1e-9));
}

TEST_CASE("a matching target gives zero loss and no parameter change") {
    QNetwork net = micro_net();
    Workspace ws;
    const QValues q = net.forward_raw(kMicroImage, kMicroJoints, ws);
    QNetwork before = net;
    const double loss = net.backward_step_raw(kMicroImage, kMicroJoints, 0, q[0], 0.1, ws);
    CHECK(loss == 0.0);
    const auto ta = net.parameter_tensors();
    const auto tb = before.parameter_tensors();
    for (std::size_t t = 0; t < ta.size(); ++t) {
        for (std::size_t i = 0; i < ta[t].size; ++i) CHECK(ta[t].data[i] == tb[t].data[i]);
    }
}

TEST_CASE("zero learning rate reports the loss but keeps parameters") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    QNetwork net = QNetwork::build(arch, 3);
    QNetwork before = net;
    Workspace ws;
    const State s = random_state(12);
    const double loss = net.backward_step(s, 2, 5.0, 0.0, ws);
    CHECK(loss > 0.0);
    const auto ta = net.parameter_tensors();
    const auto tb = before.parameter_tensors();
    for (std::size_t t = 0; t < ta.size(); ++t) {
        for (std::size_t i = 0; i < ta[t].size; ++i) CHECK(ta[t].data[i] == tb[t].data[i]);
    }
}

TEST_CASE("only the taken action's output head is updated") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    QNetwork net = QNetwork::build(arch, 4);
    const DenseLayer before = net.output_layer();
    Workspace ws;
    const int action = 6;
    net.backward_step(random_state(13), action, 3.0, 1e-3, ws);
    const DenseLayer& after = net.output_layer();
    for (int j = 0; j < after.out_n; ++j) {
        bool row_changed = after.b[j] != before.b[j];
        for (int i = 0; i < after.in_n && !row_changed; ++i) {
            row_changed = after.w[j * after.in_n + i] != before.w[j * after.in_n + i];
        }
        CHECK(row_changed == (j == action));
    }
}

TEST_CASE("micro-net gradients match finite differences to 1e-6") {
    const QNetwork net = micro_net();
    const double err =
        gradient_check_raw(net, kMicroImage, kMicroJoints, 1, 1.0, 100, 21);
    CHECK(err <= 1e-6);
}

TEST_CASE("zero-gradient case: analytic and numeric both vanish") {
    QNetwork net = micro_net();
    Workspace ws;
    const QValues q = net.forward_raw(kMicroImage, kMicroJoints, ws);
    const double err = gradient_check_raw(net, kMicroImage, kMicroJoints, 0, q[0], 50, 22);
    CHECK(err <= 1e-6);
}

TEST_CASE("shallow network gradients match finite differences to 1e-4") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    const QNetwork net = QNetwork::build(arch, 5);
    const double err = gradient_check(net, random_state(14), 3, 2.0, 100, 23);
    CHECK(err <= 1e-4);
}

TEST_CASE("deep network gradients match finite differences to 1e-4") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::deep);
    const QNetwork net = QNetwork::build(arch, 6);
    const double err = gradient_check(net, random_state(15), 7, -1.0, 100, 24);
    CHECK(err <= 1e-4);
}

TEST_CASE("target sync copies parameters exactly") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    QNetwork a = QNetwork::build(arch, 7);
    QNetwork b = QNetwork::build(arch, 8);
    const State s = random_state(16);
    CHECK(a.forward(s) != b.forward(s));
    sync_target(a, b);
    CHECK(a.forward(s) == b.forward(s));

    QNetwork deep = QNetwork::build(NetworkArch::make(ArchVariant::deep), 1);
    CHECK_THROWS_AS(sync_target(a, deep), ShapeError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    const auto dir = std::filesystem::temp_directory_path() / "sfdqn_qnet_test";
    std::filesystem::create_directories(dir);

    NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    arch.vel_scale = 2.8e-4;
    const QNetwork net = QNetwork::build(arch, 77);
    save_checkpoint(net, dir / "net.sfck");
    const QNetwork loaded = load_checkpoint(dir / "net.sfck");

    CHECK(loaded.arch().vel_scale == arch.vel_scale);
    CHECK(loaded.arch().variant == ArchVariant::shallow);
    const State s = random_state(17);
    CHECK(net.forward(s) == loaded.forward(s));

    // Re-saving reproduces identical bytes.
    save_checkpoint(loaded, dir / "net2.sfck");
    CHECK(read_file_bytes(dir / "net.sfck") == read_file_bytes(dir / "net2.sfck"));

    std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint corruption is detected by the integrity hash") {
    const auto dir = std::filesystem::temp_directory_path() / "sfdqn_qnet_test2";
    std::filesystem::create_directories(dir);
    const QNetwork net = QNetwork::build(NetworkArch::make(ArchVariant::shallow), 1);
    save_checkpoint(net, dir / "net.sfck");
    auto bytes = read_file_bytes(dir / "net.sfck");
    bytes[bytes.size() / 2] ^= 0x40;
    write_file_bytes(dir / "net.sfck", bytes);
    CHECK_THROWS_AS(load_checkpoint(dir / "net.sfck"), FormatError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("a wildly wrong target trips the exploding-gradient guard") {
    const NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    QNetwork net = QNetwork::build(arch, 2);
    Workspace ws;
    CHECK_THROWS_AS(net.backward_step(random_state(18), 0, 1e12, 1e-4, ws), NumericError);
}

TEST_CASE("non-finite parameters are reported with the failing layer") {
    QNetwork net = QNetwork::build(NetworkArch::make(ArchVariant::shallow), 2);
    net.parameter_tensors()[0].data[0] = std::nan("");
    try {
        net.forward(random_state(19));
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("conv1") != std::string::npos);
    }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    const std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
    CHECK(argmax(v) == 1);
}

}  // TEST_SUITE
