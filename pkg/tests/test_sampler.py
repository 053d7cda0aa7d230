import numpy as np
import pytest

from ivmediation.errors import DomainError, InvalidPopulation, ScenarioError
from ivmediation.oracle import mediator_cell_mean
from ivmediation.population import Population
from ivmediation.sampler import BLOCK_ROWS, Dataset, draw

from conftest import POP_A_DICT, single_stratum


def test_cell_mean_exact_where_all_strata_agree(pop_a):
    ds = draw(pop_a, 200_000, 42)
    cell = (ds.d == 1) & (ds.z == 1)
    assert ds.m[cell].mean() == 1.0


def test_noiseless_single_stratum_is_deterministic_per_cell():
    pop = single_stratum(((0, 1), (1, 0)), ((0.5, 1.5), (2.0, 3.0)))
    ds = draw(pop, 10, 3)
    for d in (0, 1):
        for z in (0, 1):
            cell = (ds.d == d) & (ds.z == z)
            assert len(set(ds.y[cell].tolist())) <= 1


def test_same_seed_same_bytes(pop_a):
    assert draw(pop_a, 1000, 7).to_csv() == draw(pop_a, 1000, 7).to_csv()
    assert draw(pop_a, 1000, 7).to_csv() != draw(pop_a, 1000, 8).to_csv()


def test_parallel_matches_serial(pop_a):
    n = 3 * BLOCK_ROWS + 17
    a, b = draw(pop_a, n, 5), draw(pop_a, n, 5, workers=4)
    for col in "dzmy":
        assert np.array_equal(getattr(a, col), getattr(b, col))


def test_prefix_stable_across_n(pop_a):
    small, big = draw(pop_a, 100, 9), draw(pop_a, 5000, 9)
    assert np.array_equal(small.y, big.y[:100])


def test_frozen_first_rows(pop_a):
    # guards the documented generator layout
    assert draw(pop_a, 3, 0).to_csv() == (
        "d,z,m,y\n"
        "0,1,1,0.38334094122909423\n"
        "0,0,0,1.3262594090999857\n"
        "1,0,1,3.0344364282665302\n"
    )


def test_mediator_follows_response_table(pop_a):
    ds = draw(pop_a.with_noise(0.0), 20_000, 1)
    # noiseless POP-A: (d, m, y) pins the stratum except where both agree
    y_tab = {0: ((0, 2), (1, 4)), 1: ((1, 1), (1, 3))}
    m_tab = {0: ((0, 1), (1, 1)), 1: ((0, 0), (0, 1))}
    for d, z, m, y in list(ds.rows())[:2000]:
        assert any(m_tab[s][d][z] == m and y_tab[s][d][m] == y for s in (0, 1))


def test_marginals(pop_a):
    n = 100_000
    ds = draw(pop_a, n, 11)
    for d in (0, 1):
        for z in (0, 1):
            p = pop_a.pr_d(d) * pop_a.pr_z(z)
            freq = ((ds.d == d) & (ds.z == z)).mean()
            assert abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / n)


def test_conditional_mediator_means(pop_a):
    ds = draw(pop_a, 100_000, 12)
    for d in (0, 1):
        for z in (0, 1):
            cell = (ds.d == d) & (ds.z == z)
            p = mediator_cell_mean(pop_a, d, z)
            k = cell.sum()
            assert abs(ds.m[cell].mean() - p) <= 4 * np.sqrt(max(p * (1 - p), 1e-12) / k)


def test_domain_errors(pop_a):
    with pytest.raises(DomainError):
        draw(pop_a, 0, 1)
    with pytest.raises(DomainError):
        draw(pop_a, 10, -1)
    with pytest.raises(InvalidPopulation):
        draw(Population.from_dict(dict(POP_A_DICT, p_d=1.0)), 10, 1)


def test_csv_round_trip(pop_a, tmp_path):
    ds = draw(pop_a, 500, 3)
    path = tmp_path / "data.csv"
    ds.write_csv(path)
    text = path.read_text()
    assert text.splitlines()[0] == "d,z,m,y"
    back = Dataset.read_csv(path)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.m, ds.m)
    assert back.to_csv() == text


@pytest.mark.parametrize("body", ["a,b,c,d\n0,0,0,1\n", "d,z,m,y\n0,2,0,1\n", "d,z,m,y\n", "d,z,m,y\n0,0,0\n"])
def test_bad_csv(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ScenarioError):
        Dataset.read_csv(path)


def test_empty_dataset_rejected():
    with pytest.raises(DomainError):
        Dataset(np.array([]), np.array([]), np.array([]), np.array([]))
