# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

from pkgutil import extend_path
__path__ = extend_path(__path__, __name__)
