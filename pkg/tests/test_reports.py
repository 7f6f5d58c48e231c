import csv

import numpy as np
import pytest

from sensorcollab import ccp, convex_qcqp, estimator, reports
from sensorcollab.model import CorrelationSpec, random_instance


def test_write_trajectory_csv_round_trip(tmp_path):
    inst = random_instance(0, num_sensors=4, horizon=2,
                           correlation=CorrelationSpec("uncorrelated"))
    rep = ccp.run(inst, ccp.random_feasible_init(
        inst, np.random.default_rng(0)))
    path = reports.write_trajectory_csv(rep, tmp_path / "traj.csv")
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == rep.iterations
    assert float(rows[-1]["objective"]) == pytest.approx(rep.objective)


def test_write_trajectory_csv_requires_rows(tmp_path):
    rep = reports.SolveReport(
        algorithm="x", status="ok", iterations=0, objective=0.0,
        objective_trajectory=[], final_w=np.zeros(1), plan=np.zeros(1))
    with pytest.raises(ValueError):
        reports.write_trajectory_csv(rep, tmp_path / "empty.csv")


def test_evaluation_report_fields():
    inst = random_instance(1, num_sensors=4, horizon=2)
    doc = estimator.evaluation_report(inst, np.zeros(inst.dim), trials=200,
                                      seed=7)
    assert set(doc) == {"trace", "covariance", "mse", "trials", "seed"}
    assert doc["trials"] == 200
    assert doc["mse"] == pytest.approx(doc["trace"], rel=0.2)
    # deterministic in the seed
    again = estimator.evaluation_report(inst, np.zeros(inst.dim), trials=200,
                                        seed=7)
    assert again["mse"] == doc["mse"]


def test_qcqp_convexity_check():
    good = convex_qcqp.QcqpProblem(
        c=np.ones(2), constraints=[(np.eye(2), np.zeros(2), -1.0)])
    good.check_convexity()
    bad = convex_qcqp.QcqpProblem(
        c=np.ones(2), constraints=[(-np.eye(2), np.zeros(2), -1.0)])
    with pytest.raises(convex_qcqp.QcqpError):
        bad.check_convexity()


def test_ccp_subproblems_are_convex():
    inst = random_instance(2, num_sensors=4, horizon=2,
                           correlation=CorrelationSpec("uncorrelated"))
    hat = ccp.random_feasible_init(inst, np.random.default_rng(1))
    problem, _ = ccp.linearized_subproblem(inst, hat)
    problem.check_convexity()
