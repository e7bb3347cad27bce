#include <doctest.h>

#include "fd.hpp"
#include "wrf/deform.hpp"
#include "wrf/rng.hpp"

using namespace wrf;

TEST_SUITE("deform") {

TEST_CASE("positional embedding shape and reference values") {
    const Vec3 v(0.25, -0.5, 1.0);
    CHECK(positional_embedding(v, 0).size() == 3);
    CHECK(positional_embedding(v, 10).size() == 63);

    const Eigen::VectorXd z = positional_embedding(Vec3::Zero(), 4);
    REQUIRE(z.size() == 27);
    for (int k = 0; k < 3; ++k) CHECK(z[k] == 0.0);
    for (int lvl = 0; lvl < 4; ++lvl) {
        for (int k = 0; k < 3; ++k) {
            CHECK(z[3 + 6 * lvl + k] == doctest::Approx(0.0));      // sin
            CHECK(z[3 + 6 * lvl + 3 + k] == doctest::Approx(1.0));  // cos
        }
    }

    const Eigen::VectorXd e = positional_embedding(v, 2);
    CHECK(e[0] == doctest::Approx(0.25));
    CHECK(e[3] == doctest::Approx(std::sin(kPi * 0.25)));
    CHECK(e[6] == doctest::Approx(std::cos(kPi * 0.25)));
    CHECK(e[9] == doctest::Approx(std::sin(2.0 * kPi * 0.25)));
}

TEST_CASE("positional embedding backward matches finite differences") {
    const Vec3 v(0.3, -0.2, 0.7);
    const int levels = 5;
    Rng rng(5);
    Eigen::VectorXd upstream(3 + 6 * levels);
    for (int i = 0; i < upstream.size(); ++i) upstream[i] = rng.normal();
    Vec3 g = Vec3::Zero();
    positional_embedding_backward(v, levels, upstream, &g);
    for (int k = 0; k < 3; ++k) {
        const double fd = central_diff(
            [&](double x) {
                Vec3 vv = v;
                vv[k] = x;
                return upstream.dot(positional_embedding(vv, levels));
            },
            v[k]);
        CHECK(rel_err(g[k], fd) < 1e-6);
    }
}

TEST_CASE("zero-initialized head produces a zero calibration") {
    DeformationNet net(6, 16, 2);
    net.init_weights(3);
    const Calibration cal = net.forward(Vec3(0.4, 0.1, 0.9), Vec3(-0.3, 0.2, 0.5));
    CHECK(cal.delta_log_scale.norm() == 0.0);
    CHECK(cal.delta_quat.norm() == 0.0);
    CHECK(std::abs(cal.delta_signal) == 0.0);
}

TEST_CASE("forward is deterministic") {
    DeformationNet net(4, 8, 2);
    net.randomize_all(11, 0.5);
    const Vec3 mu(0.2, -0.6, 0.3), tx(0.9, 0.1, -0.4);
    const Calibration a = net.forward(mu, tx);
    const Calibration b = net.forward(mu, tx);
    CHECK(a.delta_log_scale == b.delta_log_scale);
    CHECK(a.delta_quat == b.delta_quat);
    CHECK(a.delta_signal == b.delta_signal);
}

TEST_CASE("network backward matches finite differences") {
    Rng rng(77);
    for (int draw = 0; draw < 3; ++draw) {
        DeformationNet net(3, 6, 2);
        net.randomize_all(100 + draw, 0.6);
        net.set_input_scale(0.5);
        const Vec3 mu(rng.normal(), rng.normal(), rng.normal());
        const Vec3 tx(rng.normal(), rng.normal(), rng.normal());
        Eigen::Matrix<double, DeformationNet::kOutputDim, 1> upstream;
        for (int i = 0; i < upstream.size(); ++i) upstream[i] = rng.normal();

        DeformationNet::Cache cache;
        net.forward(mu, tx, &cache);
        DeformationNet::Gradients grads = net.zero_gradients();
        Vec3 gmu = Vec3::Zero(), gtx = Vec3::Zero();
        net.backward(cache, upstream, &grads, &gmu, &gtx);

        auto objective = [&](const DeformationNet& n, const Vec3& m, const Vec3& t) {
            const Calibration c = n.forward(m, t);
            Eigen::Matrix<double, DeformationNet::kOutputDim, 1> out;
            out << c.delta_log_scale, c.delta_quat, c.delta_signal.real(),
                c.delta_signal.imag();
            return upstream.dot(out);
        };

        for (int k = 0; k < 3; ++k) {
            double fd = central_diff(
                [&](double x) {
                    Vec3 m = mu;
                    m[k] = x;
                    return objective(net, m, tx);
                },
                mu[k], 1e-5);
            CHECK(rel_err(gmu[k], fd) < 1e-4);
            fd = central_diff(
                [&](double x) {
                    Vec3 t = tx;
                    t[k] = x;
                    return objective(net, mu, t);
                },
                tx[k], 1e-5);
            CHECK(rel_err(gtx[k], fd) < 1e-4);
        }

        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            const auto& w = net.layers()[l].weight;
            // spot-check a handful of weights and biases per layer
            for (int probe = 0; probe < 6; ++probe) {
                const int r = static_cast<int>(rng.uniform() * w.rows());
                const int c = static_cast<int>(rng.uniform() * w.cols());
                DeformationNet mod = net;
                const double fd = central_diff(
                    [&](double x) {
                        mod.layers()[l].weight(r, c) = x;
                        return objective(mod, mu, tx);
                    },
                    w(r, c), 1e-5);
                CHECK(rel_err(grads.layers[l].weight(r, c), fd) < 1e-4);
            }
            const int br = static_cast<int>(rng.uniform() * net.layers()[l].bias.size());
            DeformationNet mod = net;
            const double fd = central_diff(
                [&](double x) {
                    mod.layers()[l].bias[br] = x;
                    return objective(mod, mu, tx);
                },
                net.layers()[l].bias[br], 1e-5);
            CHECK(rel_err(grads.layers[l].bias[br], fd) < 1e-4);
        }
    }
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
    DeformationNet net(3, 6, 2);
    net.randomize_all(8, 0.5);
    DeformationNet::Cache cache;
    net.forward(Vec3(0.1, 0.2, 0.3), Vec3(-0.1, 0.4, 0.2), &cache);
    DeformationNet::Gradients grads = net.zero_gradients();
    Vec3 gmu = Vec3::Zero(), gtx = Vec3::Zero();
    net.backward(cache, Eigen::Matrix<double, 9, 1>::Zero(), &grads, &gmu, &gtx);
    CHECK(gmu.norm() == 0.0);
    CHECK(gtx.norm() == 0.0);
    for (const auto& l : grads.layers) {
        CHECK(l.weight.norm() == 0.0);
        CHECK(l.bias.norm() == 0.0);
    }
}

TEST_CASE("apply calibration reference cases") {
    GaussianPrimitive p;
    p.log_scale = Vec3(0.1, 0.2, 0.3);
    p.rotation = quat_normalize(Vec4(0.9, 0.1, -0.2, 0.3));
    p.signal = Complex(0.0, 0.0);

    Calibration zero;
    DeformedParams d = apply_calibration(p, zero);
    CHECK(d.log_scale == p.log_scale);
    CHECK((d.quaternion - p.rotation).norm() < 1e-14);
    CHECK(d.signal == p.signal);

    Calibration cal;
    cal.delta_signal = Complex(1.0, 0.0);
    d = apply_calibration(p, cal);
    CHECK(d.signal == Complex(1.0, 0.0));

    cal = Calibration{};
    cal.delta_quat = p.rotation;  // doubling then normalizing is the identity
    d = apply_calibration(p, cal);
    CHECK((d.quaternion - p.rotation).norm() < 1e-14);
    CHECK(d.quaternion.norm() == doctest::Approx(1.0));

    cal = Calibration{};
    cal.delta_quat = -p.rotation;  // exact cancellation falls back to base
    d = apply_calibration(p, cal);
    CHECK(d.quat_degenerate);
    CHECK((d.quaternion - p.rotation).norm() < 1e-14);
}

TEST_CASE("apply calibration backward matches finite differences") {
    Rng rng(13);
    GaussianPrimitive p;
    p.log_scale = Vec3(0.1, -0.4, 0.2);
    p.rotation = quat_normalize(Vec4(0.8, -0.1, 0.3, 0.2));
    p.signal = Complex(0.4, -0.3);
    Calibration cal;
    cal.delta_log_scale = Vec3(0.05, 0.1, -0.2);
    cal.delta_quat = Vec4(0.02, -0.04, 0.01, 0.03);
    cal.delta_signal = Complex(-0.1, 0.2);

    const Vec3 g_ls(rng.normal(), rng.normal(), rng.normal());
    const Vec4 g_q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    const Complex g_s(rng.normal(), rng.normal());

    const DeformedParams d = apply_calibration(p, cal);
    Vec3 gb_ls = Vec3::Zero();
    Vec4 gb_rot = Vec4::Zero();
    Complex gb_sig(0, 0);
    Calibration g_cal;
    apply_calibration_backward(p, d, g_ls, g_q, g_s, &gb_ls, &gb_rot, &gb_sig, &g_cal);

    auto objective = [&](const GaussianPrimitive& pp, const Calibration& cc) {
        const DeformedParams dd = apply_calibration(pp, cc);
        return g_ls.dot(dd.log_scale) + g_q.dot(dd.quaternion) +
               g_s.real() * dd.signal.real() + g_s.imag() * dd.signal.imag();
    };

    for (int k = 0; k < 3; ++k) {
        double fd = central_diff(
            [&](double x) {
                GaussianPrimitive pp = p;
                pp.log_scale[k] = x;
                return objective(pp, cal);
            },
            p.log_scale[k]);
        CHECK(rel_err(gb_ls[k], fd) < 1e-6);
        fd = central_diff(
            [&](double x) {
                Calibration cc = cal;
                cc.delta_log_scale[k] = x;
                return objective(p, cc);
            },
            cal.delta_log_scale[k]);
        CHECK(rel_err(g_cal.delta_log_scale[k], fd) < 1e-6);
    }
    for (int k = 0; k < 4; ++k) {
        double fd = central_diff(
            [&](double x) {
                GaussianPrimitive pp = p;
                pp.rotation[k] = x;
                return objective(pp, cal);
            },
            p.rotation[k]);
        CHECK(rel_err(gb_rot[k], fd) < 1e-5);
        fd = central_diff(
            [&](double x) {
                Calibration cc = cal;
                cc.delta_quat[k] = x;
                return objective(p, cc);
            },
            cal.delta_quat[k]);
        CHECK(rel_err(g_cal.delta_quat[k], fd) < 1e-5);
    }
    CHECK(rel_err(gb_sig.real(), g_s.real()) < 1e-12);
    CHECK(rel_err(g_cal.delta_signal.imag(), g_s.imag()) < 1e-12);
}

}  // TEST_SUITE
