"""
Environment check for the smooth copula bootstrap package
"""
import os
import sys
from pathlib import Path

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

ROOT = Path(__file__).resolve().parent.parent


def check_python_version():
    """Check if Python version is 3.11+"""
    if sys.version_info < (3, 11):
        print("❌ Python 3.11+ is required. Current version:", sys.version)
        return False
    print(f"✅ Python version: {sys.version}")
    return True


def setup_environment():
    """Point at the example environment file"""
    env_file = ROOT / "env.example"
    if env_file.exists():
        print("📝 Optional: copy env.example to .env to override numerical defaults:")
        print("   cp env.example .env")
    else:
        print("⚠️  env.example not found")


def test_installation():
    """Import the numerical stack and build one quadrature rule"""
    print("🧪 Testing installation...")

    try:
        import numpy
        import scipy
        import pandas
        import pydantic
        import fastapi

        from config.settings import get_settings
        from utils.quadrature import gauss_hermite_rule

        settings = get_settings()
        rule = gauss_hermite_rule(settings.gh_order, 2)
        print(f"✅ Core dependencies imported, {len(rule.weights)} quadrature nodes in 2-D")
        return True
    except ImportError as e:
        print(f"❌ Import error: {e}")
        return False


def main():
    print("Smooth Copula Bootstrap setup check")
    print("=" * 50)

    if not check_python_version():
        sys.exit(1)

    setup_environment()

    if not test_installation():
        print("⚠️  Installation test failed, run: pip install -e .")
        sys.exit(1)

    print("\n✅ Setup completed!")
    print("\n🚀 Next steps:")
    print("1. smoothboot --help")
    print("2. python run_api.py")
    print("3. pytest")


if __name__ == "__main__":
    main()
