#!/usr/bin/env python3
"""
SpineGrip CLI - Microspine Gripper Grasp Simulator

Simulates a tendon-driven microspine gripper grasping spheres and rock
surrogates, from per-phalanx pressure to Monte Carlo detachment sweeps.

Usage: python main.py {pressure,detach,sweep,mission,calibrate} [options]
"""

import sys
import os

# Add the current directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli import main


if __name__ == "__main__":
    sys.exit(main())
