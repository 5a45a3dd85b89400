import numpy as np
import pytest

from hyperblocks.dataset import Dataset, NormalizationParams, bundled_path, load_csv, normalize


def make_dataset(points, labels, class_names=None) -> Dataset:
    """Dataset from already-normalized points (identity normalization)."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = points.shape[1]
    k = int(labels.max()) + 1 if len(labels) else 1
    names = tuple(f"x{i + 1}" for i in range(n))
    classes = tuple(class_names) if class_names else tuple(f"c{i}" for i in range(k))
    return Dataset(points, labels, names, classes, NormalizationParams(np.zeros(n), np.ones(n)))


def random_dataset(rng, n_points=None, n_attributes=None, n_classes=None, grid=None) -> Dataset:
    """Random labeled points; ``grid`` snaps values to multiples of 1/grid (forces ties)."""
    n_points = n_points or int(rng.integers(2, 201))
    n_attributes = n_attributes or int(rng.integers(1, 7))
    n_classes = n_classes or int(rng.integers(2, 4))
    centers = rng.random((n_classes, n_attributes))
    labels = rng.integers(0, n_classes, n_points)
    labels[:n_classes] = np.arange(n_classes)[: min(n_classes, n_points)]
    pts = np.clip(centers[labels] + rng.normal(0, 0.2, (n_points, n_attributes)), 0, 1)
    if grid:
        pts = np.round(pts * grid) / grid
    return make_dataset(pts, labels)


def fixture_datasets():
    """Named synthetic fixtures used by the purity and rendering suites."""
    rng = np.random.default_rng(7)
    out = {}
    # two tight clusters
    a = 0.2 + 0.05 * rng.random((30, 3))
    b = 0.7 + 0.05 * rng.random((30, 3))
    out["clusters"] = make_dataset(np.vstack([a, b]), [0] * 30 + [1] * 30)
    # interleaved stripes on one axis, noise on the other
    x = rng.random(80)
    y = rng.random(80)
    out["stripes"] = make_dataset(np.column_stack([x, y]), (np.floor(x * 6) % 2).astype(int))
    # three overlapping gaussian classes on a coarse grid (ties and duplicates)
    out["grid3"] = random_dataset(np.random.default_rng(11), 150, 4, 3, grid=8)
    # xor-like checkerboard with duplicates of conflicting labels
    pts = np.array([[0, 0], [0, 1], [1, 0], [1, 1], [0.5, 0.5], [0.5, 0.5]], dtype=float)
    out["conflict"] = make_dataset(pts, [0, 1, 1, 0, 0, 1])
    return out


@pytest.fixture(scope="session")
def iris_raw():
    return load_csv(bundled_path("iris"))


@pytest.fixture(scope="session")
def iris(iris_raw):
    return normalize(iris_raw)


@pytest.fixture(scope="session")
def wbc_raw():
    return load_csv(bundled_path("wbc"))


@pytest.fixture(scope="session")
def wbc(wbc_raw):
    return normalize(wbc_raw)


@pytest.fixture(scope="session")
def synthetic():
    return fixture_datasets()


# -- acceptance summary -----------------------------------------------------------

_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    n = int(name.split("_")[2])
    if report.failed:
        _CRITERIA[n] = "FAIL"
    elif report.when == "call":
        _CRITERIA.setdefault(n, "SKIP" if report.skipped else "PASS")

def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n}: {_CRITERIA[n]}")
