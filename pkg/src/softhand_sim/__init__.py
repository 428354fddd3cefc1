"""Kinematics and quasi-static grasp simulation of the BPI SoftHand."""

__version__ = "0.1.0"
