"""
graspalign: geometry and pose of a grasped object from pointmaps and
end-effector poses.
"""

__version__ = "0.1.0"
