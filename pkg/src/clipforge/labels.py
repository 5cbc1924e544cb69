"""Canonical class list: index 1 is the positive (violent) class everywhere."""

CLASSES_LIST = ("NonViolence", "Violence")
POSITIVE_CLASS = 1


def onehot(class_indices, num_classes=len(CLASSES_LIST)):
    import numpy as np

    eye = np.eye(num_classes, dtype=np.float32)
    return eye[np.asarray(class_indices, dtype=np.int64)]
