from percomicro.bitstream.arithcoder import (AdaptiveFrequencyModel,
                                            ArithmeticDecoder,
                                            ArithmeticEncoder, EOF_SYMBOL,
                                            arith_decode, arith_encode)
from percomicro.bitstream.container import (BitstreamHeader, CompressedImage,
                                           FLAG_CAPTION, FLAG_GLOBAL,
                                           HEADER_BYTES, MAGIC, VERSION,
                                           make_header, read_container,
                                           read_container_file,
                                           write_container,
                                           write_container_file)
from percomicro.bitstream.packing import (pack_indices, packed_size,
                                         unpack_indices)
from percomicro.bitstream.rate import (RateReport, container_rates,
                                      spatial_rate, total_rate)
