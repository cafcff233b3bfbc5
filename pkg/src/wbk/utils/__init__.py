from wbk.utils.formatting import write_manifest, write_table
from wbk.utils.tracking import RunTracker
