import numpy as np
import pytest

from submatch.datasets import gen_er, gen_extended_barabasi
from submatch.encoder import EncoderConfig
from submatch.graphs import LabeledGraph
from submatch.order import MarginConfig
from submatch.sampling import SamplerConfig
from submatch.training import TrainConfig, train


@pytest.fixture
def triangle():
    return LabeledGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return LabeledGraph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def star6():
    return LabeledGraph.from_edges(6, [(0, i) for i in range(1, 6)])


@pytest.fixture
def k4():
    return LabeledGraph.from_edges(4, [(a, b) for a in range(4) for b in range(a + 1, 4)])


def desk_targets(n_graphs: int = 40, max_nodes: int = 30, base_seed: int = 0):
    """The synthetic target pool used by the trained-model fixtures: an even
    mix of sparse uniform-random and preferential-attachment graphs."""
    rng = np.random.default_rng(base_seed)
    graphs = []
    for i in range(n_graphs // 2):
        n = int(rng.integers(16, max_nodes + 1))
        graphs.append(gen_er(n, 4.0 / n, 1, seed=1000 + i))
    for i in range(n_graphs - n_graphs // 2):
        n = int(rng.integers(16, max_nodes + 1))
        graphs.append(gen_extended_barabasi(n, m=2, seed=2000 + i))
    return graphs


DESK_TRAIN = TrainConfig(
    epochs=55,
    min_iterations=32,
    plateau_patience=6,
    regen_period=20,
    val_radius=3,
    seed=0,
)
DESK_ENCODER = EncoderConfig(
    layers=4, hidden_dim=32, output_dim=32, label_alphabet_size=1
)
DESK_SAMPLER = SamplerConfig(strategy="random_bfs", max_nodes=15)
DESK_MARGIN = MarginConfig()


@pytest.fixture(scope="session")
def desk_pool():
    return desk_targets()


@pytest.fixture(scope="session")
def trained(desk_pool):
    """Desk-scale trained model shared by the acceptance suite and CLI tests.

    Takes a few minutes; session-scoped so it trains once per run. The
    whole-query decision cutoff is calibrated the same way the train command
    does it.
    """
    import time

    from submatch.evaluate import make_problem1_instances
    from submatch.query import alignment, build_index, calibrate_decision_cutoff, decide

    start = time.perf_counter()
    result = train(desk_pool, DESK_TRAIN, DESK_ENCODER, DESK_MARGIN, DESK_SAMPLER)
    result.train_seconds = time.perf_counter() - start
    ckpt = result.checkpoint
    rng = np.random.default_rng([DESK_TRAIN.seed, 4])
    instances = make_problem1_instances(desk_pool, 40, rng)
    scores = []
    labels = []
    for inst in instances:
        index = build_index(inst.target, ckpt)
        scores.append(decide(alignment(inst.query, index, ckpt), ckpt.margin).score)
        labels.append(inst.oracle_label)
    ckpt.decision_cutoff = calibrate_decision_cutoff(scores, labels)
    return result
