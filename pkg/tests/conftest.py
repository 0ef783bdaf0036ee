import numpy as np
import pytest

from attrib_forge.synthetic import synthetic_products, write_csv

SCHEMA = {"ratings": "rating_count", "star_rating": "star_rating", "reviews": "drop"}


@pytest.fixture
def product_csv(tmp_path):
    header, rows = synthetic_products(240, seed=3)
    return write_csv(tmp_path / "products.csv", header, rows)


@pytest.fixture
def run_config(tmp_path, product_csv):
    def make(**sections):
        body = {
            "run": {"seed": 11, "folds": 5},
            "dataset": {"input": product_csv.name},
            "schema": SCHEMA,
            "model": {"kind": "dt"},
            "ga": {"population": 10, "generations": 4, "top_k": 2},
            "shapley": {"background": 15},
            "compare": {"models": "knn, dt"},
        }
        for name, values in sections.items():
            body.setdefault(name, {}).update(values)
        text = "".join(
            f"[{name}]\n" + "".join(f"{k} = {v}\n" for k, v in values.items()) + "\n"
            for name, values in body.items()
        )
        path = tmp_path / "run.cfg"
        path.write_text(text)
        return path

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL/SKIP verdict line for an acceptance criterion."""
    lines = request.config._acceptance_lines

    def record(number: int, status: str, detail: str) -> str:
        line = f"criterion {number:>2}: {status} - {detail}"
        lines[number] = line
        print(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
