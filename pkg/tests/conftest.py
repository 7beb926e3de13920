import pytest

from app.utils.config import reload_config


@pytest.fixture(autouse=True)
def restore_config():
    """Tests may reload the singleton with patched env; rebuild it once they finish."""
    yield
    reload_config(skip_dotenv=True)
