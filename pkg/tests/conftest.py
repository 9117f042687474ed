"""Session-scoped trained artifacts shared across the suite.

Everything derives deterministically from MASTER_SEED through the Workspace,
so tests see the same victims/attacks regardless of execution order.
"""

import numpy as np
import pytest

from jamgen.harness.runner import Workspace

MASTER_SEED = 1234


@pytest.fixture(scope="session")
def ws() -> Workspace:
    return Workspace(MASTER_SEED)


@pytest.fixture(scope="session")
def ae_bundle(ws):
    return ws.bundle("autoencoder")


@pytest.fixture(scope="session")
def ae_system(ae_bundle):
    return ae_bundle.victim


@pytest.fixture(scope="session")
def mod_bundle(ws):
    return ws.bundle("modulation")


@pytest.fixture(scope="session")
def ofdm_bundle(ws):
    return ws.bundle("ofdm")


@pytest.fixture(scope="session")
def ae_pgm(ws):
    gen, _ = ws.pgm("autoencoder", -6.0)
    return gen


@pytest.fixture(scope="session")
def ae_pgm_beta0(ws):
    gen, _ = ws.pgm("autoencoder", -6.0, beta=0.0)
    return gen


@pytest.fixture(scope="session")
def ae_uap(ws):
    return ws.uap("autoencoder", -6.0)


@pytest.fixture(scope="session")
def ae_disc_alpha0(ws, ae_pgm):
    from jamgen.gan import train_discriminator
    from jamgen.harness.seeds import stage_rng
    return train_discriminator(ae_pgm, stage_rng(MASTER_SEED, "disc-alpha0"))


@pytest.fixture(scope="session")
def ae_hardened_pgm(ws, ae_system):
    """Autoencoder hardened by adversarial training against the defender's own
    (structure-aware) generator."""
    from jamgen import defenses as dfs
    from jamgen.harness.seeds import stage_rng
    gen_def = ws.defender_pgm("autoencoder", -6.0)
    return dfs.adversarial_training(ae_system, gen_def.perturber("per-transmission"),
                                    dfs.AdvTrainConfig(),
                                    stage_rng(MASTER_SEED, "at-pgm"))


@pytest.fixture(scope="session")
def ae_hardened_uap(ws, ae_system, ae_uap):
    """Autoencoder hardened against the pilot-estimated single UAP (augmented
    across the jammer's phase-rotation orbit)."""
    import numpy as np
    from jamgen import defenses as dfs
    from jamgen.harness.seeds import stage_rng
    from jamgen.signal_core import rotate_phase
    est = ws.pilot_estimate("autoencoder", ae_uap.perturber("none"), "uap-none")

    def source(y, rng):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=len(y))
        return (y + rotate_phase(np.broadcast_to(est.delta_hat, y.shape),
                                 theta)).astype(np.float32)

    return dfs.adversarial_training(ae_system, source, dfs.AdvTrainConfig(),
                                    stage_rng(MASTER_SEED, "at-uap"))


@pytest.fixture(scope="session")
def ofdm_hardened(ws, ofdm_bundle):
    """OFDM detector hardened against the structure-aware defender's generator."""
    from jamgen import defenses as dfs
    from jamgen.harness.seeds import stage_rng
    gen_def = ws.defender_pgm("ofdm", -10.0)
    frames, bits = ofdm_bundle.train_data
    return dfs.adversarial_training_ofdm(frames, bits,
                                         gen_def.perturber("per-transmission"),
                                         stage_rng(MASTER_SEED, "at-ofdm"))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(987654321)
