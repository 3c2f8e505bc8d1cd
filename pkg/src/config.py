import os

from dotenv import load_dotenv

SRC_DIR = os.path.dirname(os.path.abspath(__file__))
ROOT_DIR = os.path.dirname(SRC_DIR)

load_dotenv(os.path.join(ROOT_DIR, ".env"), override=False)

SETTINGS_PATH = os.getenv("WORKBENCH_CONFIG", os.path.join(ROOT_DIR, "workbench.yaml"))

REPORTS_DIR = os.getenv("WORKBENCH_REPORTS_DIR", "reports")

LOG_LEVEL = os.getenv("WORKBENCH_LOG_LEVEL", "warn")

SCENARIOS_DIR = os.path.join(ROOT_DIR, "scenarios")
