"""Smoke test for the `fama` extension module.

Build and place the module next to this script first:

    cargo build -p fama-python --features extension-module --release
    cp target/release/libfama.so python/fama.so
"""

import math

import fama


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), (a, b)


def main():
    gamma = fama.db_to_linear(-3.0)
    close(gamma, 10 ** -0.3, 1e-15)

    close(fama.single_port_op(1.0, 1, 1.0), 0.5, 1e-12)
    close(fama.op_upper_bound(1.0, 1, 1.0, 2), 0.25, 1e-12)
    assert fama.fast_params([3]) == (3, 3.0, 1.0)

    blocks = fama.BlockStructure.jakes(100, 1.0, delta=0.97)
    assert blocks.lengths == [42, 38, 18, 2], blocks
    assert blocks.num_blocks == 4 and blocks.n_ports == 100
    assert fama.BlockStructure.constant(100).num_blocks == 1

    cfg = fama.SystemConfig(5, 2, gamma, n_ports=100, antenna_size=1.0)
    assert cfg.u_tilde == 8 and cfg.m_interferers == [2, 2, 2, 2]

    exact = fama.op_slow_exact(cfg, blocks)
    quad = fama.op_slow_quadrature(cfg, blocks)
    ub = fama.op_slow_upper_bound(cfg, blocks)
    assert exact.method == "exact_integral" and quad.meta["n_i"] == "50"
    close(quad.value, exact.value, 1e-3)
    assert exact.value <= ub.value <= 1.0

    fast = fama.op_fast(cfg, blocks, method="exact")
    assert fast.value <= exact.value
    assert "m_tilde_int" in fast.meta

    mc = fama.estimate_op(cfg, blocks, trials=100_000, seed=7)
    assert abs(mc.value - exact.value) <= 4 * math.sqrt(exact.value * (1 - exact.value) / 1e5)
    again = fama.estimate_op(cfg, blocks, trials=100_000, seed=7)
    assert again.value == mc.value

    sweep = fama.estimate_op_sweep(cfg, blocks, [0.1, 1.0, 10.0], trials=20_000, mode="approx")
    assert [e.value for e in sweep] == sorted(e.value for e in sweep)

    g = fama.estimate_gains(cfg, blocks, 10, trials=20_000)
    assert 0.0 <= g["mux_gain"] <= 5.0 and g["ofama_gain"] >= g["mux_gain"] - 1e-12

    close(fama.mux_gain(5, 0.2), 4.0, 1e-15)
    close(fama.ofama_gain(5, 5, 0.3), fama.mux_gain(5, 0.3), 1e-12)
    close(fama.ofama_gain_approx(5, 100, 0.01), 5.0, 1e-15)

    for bad in (lambda: fama.SystemConfig(1, 2, 1.0), lambda: fama.BlockStructure.jakes(1, 1.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print(f"fama {fama.__version__}: smoke test passed (op exact {exact.value:.4e}, mc {mc.value:.4e})")


if __name__ == "__main__":
    main()
