"""
Run a stability-lab pipeline from the repository root.

    python run_lab.py dd-audit --config experiments/dd_audit.toml
"""
import sys
from pathlib import Path

# Add the project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))


def main() -> int:
    """Start a pipeline run (arguments as for ``stability-lab pipeline``)"""
    from backend.cli.main import main as cli_main
    from config.environment import env_center

    print("🧪 Starting stability-lab pipeline...")
    print(f"👷 Workers: {env_center.run_config.workers}")
    print(f"📁 Output: {env_center.run_config.output_directory}")
    print("-" * 50)
    try:
        return cli_main(["pipeline", *sys.argv[1:]])
    except KeyboardInterrupt:
        print("\n👋 Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
