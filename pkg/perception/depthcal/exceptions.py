# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.


class DepthcalException(Exception):
    pass


class InvalidCamera(DepthcalException):
    pass


class InvalidConfig(DepthcalException):
    pass


class ShapeMismatch(DepthcalException):
    pass


class NonFiniteInput(DepthcalException):
    pass


class FormatError(DepthcalException):
    pass


class PipelineStageError(DepthcalException):

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super(PipelineStageError, self).__init__(
            'Stage "%s" failed: %s' % (stage, cause))
