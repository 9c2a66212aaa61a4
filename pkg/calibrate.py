# calibrate.py
import logging
import os
import sys

from dotenv import load_dotenv

from routes.acceptance_routes import ORACLE_RESOLUTION, compute_oracles, oracle_path
from utils.file_utils import ensure_folder, write_json

load_dotenv()

# CONFIG
RESOLUTION = int(os.getenv("HOLOMOTION_ORACLE_RESOLUTION", ORACLE_RESOLUTION))


def main(path=None):
    """Compute the quadrature oracles of the acceptance suite and store them."""
    logging.basicConfig(level=os.getenv("LOG_LEVEL", "INFO").upper())
    path = path or oracle_path()
    ensure_folder(os.path.dirname(os.path.abspath(path)))
    print(f"Computing oracles at resolution {RESOLUTION}...")
    oracles = compute_oracles(RESOLUTION)
    write_json(path, oracles)
    print(f"✅ hypothesis integral {oracles['hypothesis_integral']:.12g} (+- {oracles['hypothesis_error']:.1e})")
    print(f"✅ Oracles saved to {path}")
    return oracles


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
