from aoipyt import aoinet
from aoipyt.errors import ConfigurationError, UsageError
from aoipyt.policy import MaxAgePolicy
import numpy as np
import tempfile
import unittest
import os

H10 = sum(1 / k for k in range(1, 11))


class ReferenceScenarioTest(unittest.TestCase):
    def setUp(self):
        """Call before every test case."""
        self.scenario = aoinet('table1.cfg', display_msg=False)

    def tearDown(self):
        """Call after every test case."""
        self.scenario.unload()

    def test_getters(self):
        err_msg = "Wrong scenario values"
        d = self.scenario
        assert d.getSensorCount() == 10, err_msg
        np.testing.assert_array_equal(d.getSensorPacketLength(), np.arange(1, 11) * 10.0, err_msg=err_msg)
        assert d.getSensorPacketLength(0) == 10.0, err_msg
        np.testing.assert_array_equal(d.getSensorAoIThreshold([1, 2]), [40.0, 60.0], err_msg=err_msg)
        assert d.getSensorPenaltyWeight(9) == 100.0, err_msg
        assert d.getSuccessProbability() == 0.9, err_msg
        np.testing.assert_allclose(d.getBenchmarkProbabilities()[0], 1 / H10, rtol=1e-12, err_msg=err_msg)
        assert len(d.getConfigHash()) == 12, err_msg
        info = d.getSensorsInfo()
        assert info.SensorCount == 10 and info.SuccessProbability == 0.9, err_msg

    def test_setters(self):
        err_msg = "Wrong scenario update"
        d = self.scenario
        digest = d.getConfigHash()
        d.setSensorAoIThreshold(0, 25)
        assert d.getSensorAoIThreshold(0) == 25.0 and d.getSensorAoIThreshold(1) == 40.0, err_msg
        assert d.getConfigHash() != digest, err_msg
        d.setSensorPacketLength([0, 1], [5, 6])
        np.testing.assert_array_equal(d.getSensorPacketLength([0, 1, 2]), [5.0, 6.0, 30.0], err_msg=err_msg)
        d.setSensorPenaltyWeight(np.zeros(10))
        np.testing.assert_array_equal(d.getSensorPenaltyWeight(), np.zeros(10), err_msg=err_msg)
        d.setSuccessProbability(0.5)
        assert d.getSuccessProbability() == 0.5, err_msg
        with self.assertRaises(ConfigurationError):
            d.setSuccessProbability(0.0)
        with self.assertRaises(ConfigurationError):
            d.setSensorAoIThreshold(3, -1)
        with self.assertRaises(UsageError):
            d.setSensorPenaltyWeight([1, 2, 3])
        assert d.getSuccessProbability() == 0.5, err_msg

    def test_time_series(self):
        err_msg = "Wrong computed time series"
        res = self.scenario.getComputedTimeSeries('round_robin', horizon=30, seed=2)
        np.testing.assert_array_equal(res.Action, np.arange(30) % 10, err_msg=err_msg)
        assert res.Age.shape == (30, 10), err_msg
        np.testing.assert_allclose(res.Time, np.cumsum(res.TxDuration), err_msg=err_msg)
        np.testing.assert_array_equal(res.Age[np.arange(30), res.Action], res.TxDuration, err_msg=err_msg)
        assert np.all(res.Attempts >= 1) and np.all(res.Reward < 0), err_msg
        again = self.scenario.getComputedTimeSeries('round_robin', horizon=30, seed=2)
        np.testing.assert_array_equal(res.Age, again.Age, err_msg=err_msg)
        report = self.scenario.evaluatePolicy('round_robin', episodes=1, horizon=30, seed=2)
        np.testing.assert_array_equal(res.Age.mean(axis=0), report.avg_aoi, err_msg=err_msg)

    def test_evaluate_and_compare(self):
        err_msg = "Wrong policy evaluation"
        d = self.scenario
        report = d.evaluatePolicy('max_age', episodes=2, horizon=100, seed=1)
        assert report.policy == 'max_age' and report.config_hash == d.getConfigHash(), err_msg
        assert d.evaluatePolicy(MaxAgePolicy(), episodes=2, horizon=100, seed=1).objective == report.objective, \
            err_msg
        table = d.comparePolicies('benchmark', 'round_robin', 'max_age', episodes=2, horizon=100, seed=1)
        assert list(table.columns) == ['benchmark', 'round_robin', 'max_age'], err_msg
        assert table.loc['Objective', 'max_age'] == report.objective, err_msg
        with self.assertRaises(UsageError):
            d.evaluatePolicy('learned')

    def test_to_excel(self):
        err_msg = "Excel file was not written"
        with tempfile.TemporaryDirectory() as tmp:
            report = self.scenario.evaluatePolicy('benchmark', episodes=1, horizon=50, seed=0)
            path = report.to_excel(os.path.join(tmp, 'report'))
            assert path.endswith('.xlsx') and os.path.exists(path), err_msg
            path = self.scenario.getSensorsInfo().to_excel(os.path.join(tmp, 'sensors.xlsx'))
            assert os.path.exists(path), err_msg


class SchedulerTest(unittest.TestCase):
    def setUp(self):
        """Call before every test case."""
        self.scenario = aoinet('two_sensors.cfg', display_msg=False)
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        """Call after every test case."""
        self.scenario.unload()
        self.tmp.cleanup()

    def test_train_save_load(self):
        err_msg = "Wrong scheduler life cycle"
        d = self.scenario
        with self.assertRaises(UsageError):
            d.saveScheduler(os.path.join(self.tmp.name, 'none.json'))
        model = d.trainScheduler(episodes=2, seed=3)
        assert model.version == 10 and len(d.TrainingStats.records) == 2, err_msg
        trained = d.evaluatePolicy('learned', episodes=2, horizon=50, seed=0)
        path = d.saveScheduler(os.path.join(self.tmp.name, 'checkpoint.json'))

        other = aoinet('two_sensors.cfg', display_msg=False)
        loaded = other.loadScheduler(path)
        np.testing.assert_array_equal(loaded.params.theta, model.params.theta, err_msg=err_msg)
        assert loaded.version == 10, err_msg
        again = other.evaluatePolicy('learned', episodes=2, horizon=50, seed=0)
        assert again.objective == trained.objective, err_msg
        by_path = other.evaluatePolicy('checkpoint:' + path, episodes=2, horizon=50, seed=0)
        assert by_path.objective == trained.objective, err_msg

        reference = aoinet('table1.cfg', display_msg=False)
        with self.assertRaises(UsageError):
            reference.loadScheduler(path)

    def test_changed_scenario_warns(self):
        d = self.scenario
        d.trainScheduler(episodes=1)
        path = d.saveScheduler(os.path.join(self.tmp.name, 'checkpoint.json'))
        other = aoinet('two_sensors.cfg', display_msg=False)
        other.setSuccessProbability(0.5)
        with self.assertWarns(UserWarning):
            other.loadScheduler(path)

    def test_unload(self):
        d = self.scenario
        d.trainScheduler(episodes=1)
        d.unload()
        assert d.model is None and d.TrainingStats is None, "Scheduler still loaded"


if __name__ == "__main__":
    unittest.main()  # run all tests
