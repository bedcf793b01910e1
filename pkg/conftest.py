# Lives at the repository root so the top-level packages import without installation.


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo acceptance runs")
