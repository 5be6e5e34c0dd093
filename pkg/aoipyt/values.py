# -*- coding: utf-8 -*-
"""
   Result containers and small file helpers shared by the toolkit.
"""
import logging
import random
import string
import json
import os

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def safe_delete(file):
    if isinstance(file, list):
        for file_path in file:
            safe_delete(file_path)
        return
    if os.path.exists(file):
        try:
            os.remove(file)
        except OSError as e:
            logger.warning(f"Could not delete {file}: {e}")


def isList(var):
    if isinstance(var, (list, tuple, np.ndarray)):
        return True
    else:
        return False


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class AoIValues:

    def __init__(self, **values):
        for key, value in values.items():
            setattr(self, key, value)

    def disp(self):
        """ Displays the values on the command window

        :param self: Values to be printed on the command window
        :type self: AoIValues class
        :return: None

        """
        print_values = vars(self)
        print('\n')
        for i in print_values:
            print(f'{i}: {print_values[str(i)]}', end='\n')

    def to_dict(self):
        """ Transform AoIValues class values to dict format

        :param self: Values to add in the dictionary
        :type self: AoIValues class
        :return: dictionary with the values
        :rtype: dict

        """
        dict_values = vars(self)
        return dict_values

    def to_excel(self, filename=None, attributes=None):
        """ Save to an Excel file the values of AoIValues class.

        One sheet per array attribute; 2-D arrays get one column per
        sensor, 1-D arrays a single column. Scalars and strings are
        collected in an 'Info' sheet.

        :param self: Values to add to the Excel file
        :type self: AoIValues class
        :param filename: excel filename, defaults to None
        :type filename: str, optional
        :param attributes: attributes to add to the file, defaults to None
        :type attributes: str or list of str, optional
        :return: the filename written
        :rtype: str

        """
        if filename is None:
            rand_id = ''.join(random.choices(string.ascii_letters
                                             + string.digits, k=5))
            filename = 'ToExcelfile_' + rand_id + '.xlsx'
        if '.xlsx' not in filename:
            filename = filename + '.xlsx'
        if attributes is not None and not isList(attributes):
            attributes = [attributes]

        dictVals = self.to_dict()
        info = {}
        with pd.ExcelWriter(filename, mode="w", engine="xlsxwriter") as writer:
            for key, value in dictVals.items():
                if attributes and key not in attributes:
                    continue
                if isinstance(value, (np.ndarray, list)) and np.ndim(value) in (1, 2):
                    arr = np.asarray(value)
                    if arr.ndim == 1:
                        df = pd.DataFrame({key: arr})
                    else:
                        df = pd.DataFrame(arr, columns=[f'n={n}' for n in range(arr.shape[1])])
                    df.insert(0, "Index", list(range(1, len(df) + 1)), True)
                    df.set_index("Index", inplace=True)
                    df.to_excel(writer, sheet_name=key[:31])
                elif np.ndim(value) == 0:
                    info[key] = _plain(value)
            if info:
                pd.DataFrame({'Value': pd.Series(info, dtype=object)}).to_excel(writer, sheet_name='Info')
        return filename

    def to_json(self, filename=None):
        """ Transforms AoIValues class values to json object and saves them
        to a json file if filename is provided

        :param self: Values to add in the json file
        :type self: AoIValues class
        :param filename: json filename, defaults to None
        :type filename: str, optional
        :return: the json object with the values
        :rtype: json object

        """
        dictVals = {key: _plain(value) for key, value in self.to_dict().items()}
        json_object = json.dumps(dictVals, indent=2, sort_keys=True)
        if filename:
            if '.json' not in filename:
                filename = filename + '.json'
            with open(filename, "w") as f:
                f.write(json_object)
        return json_object
